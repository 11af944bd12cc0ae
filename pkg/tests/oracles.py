"""Frozen reference values.

Closed-form numbers are recomputed in the tests; the values below come from
converged runs of the bundled model curves and are kept to catch drift.
"""

# CODATA 2018
HARTREE_CM1 = 219474.6313632
K_B_HARTREE_PER_K = 3.1668115634e-6
I_AU_W_CM2 = 3.50944758e16
AMU_ME = 1822.888486209
M_133CS = 132.905451933
M_135CS = 134.905977

# model ground curve, 133Cs2
CS_PHI_OVER_PI = 54.6
CS_COUNT = 54
CS_A_ZERO_ENERGY = -1101.69  # bohr, +-0.01
CS_GRID_N = 1121

# reference inner-wall deformation (surrogates.REFERENCE_LAMBDA_CM)
REF_A_133 = -350.0  # bohr, +-0.01
REF_A_135 = 146.2  # bohr, +-0.1
REF_COUNT = 54

# prominent FC nodes of the undeformed model pair at 200 uK, cm-1
CS_NODES = (5.6243, 17.5886, 33.4903, 52.4647, 74.0276, 97.8548, 123.6896)

# off-resonant dressed model
SCHEME1_E_F_CM1 = 11159.88
SCHEME1_CROSSING_R = 24.759
SCHEME1_SIGN_CHANGE_MW = 18.655  # MW/cm^2, +-1%

# Feshbach dressed model at 75 W/cm^2
SCHEME2_A_BG = -1101.71
SCHEME2_DELTA0_MHZ = -6.25
SCHEME2_GAMMA_MHZ = 7.2318

# critical C6 for cs_ground(C6=c) between -6331 and -6400
CRITICAL_C6 = -6339.59
