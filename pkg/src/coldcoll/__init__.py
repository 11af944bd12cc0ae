"""Cold-collision toolkit: mapped-grid coupled-channel solver, scattering lengths,
photoassociation Franck-Condon spectra and optical tuning scans."""

__version__ = "0.1.0"
