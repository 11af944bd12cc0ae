import math

import numpy as np
import pytest

from coldcoll import mfgm
from coldcoll import potentials as P
from coldcoll.units import to_au
from oracles import CS_COUNT, CS_GRID_N

UK = to_au(1.0, "uK")


def lowest(curve, grid, n=10):
    return np.linalg.eigvalsh(mfgm.build_hamiltonian(grid, curve).matrix)[:n]


def test_box_spectrum_exact_on_uniform_grid():
    L, mu = 7.0, 3.0
    E = lowest(P.zero_potential(), mfgm.uniform_grid(64, 0.0, L, mu), 20)
    exact = (np.arange(1, 21) * math.pi / L) ** 2 / (2 * mu)
    assert np.allclose(E, exact, rtol=1e-12)


def test_harmonic_converges_exponentially():
    errs = []
    for N in (24, 32, 40, 48):
        E = lowest(P.harmonic(1.0, 10.0), mfgm.uniform_grid(N, 0.0, 20.0, 1.0), 3)
        errs.append(np.max(np.abs(E - (np.arange(3) + 0.5))))
    # each step of 8 points gains more than a decade until round-off
    assert errs[1] < errs[0] / 10 and errs[2] < errs[1] / 10
    assert errs[-1] < 1e-10


def test_mapped_grid_harmonic():
    mu, k = 1.0, 1.0
    curve = P.harmonic(k, 10.0)
    grid = mfgm.build_grid(curve, mu, 40.0, 0.0, 20.0, beta=4.0)
    E = lowest(curve, grid, 10)
    assert np.allclose(E, np.arange(10) + 0.5, rtol=1e-9)


def test_hamiltonian_symmetric(cs_hamiltonian):
    assert cs_hamiltonian.asymmetry() < 1e-14
    assert not cs_hamiltonian.is_complex


def test_cs_grid_size(cs_hamiltonian):
    grid = cs_hamiltonian.grid
    assert grid.N == CS_GRID_N
    assert grid.R_min == 8.5 and grid.R_max == 20000.0


def test_bound_states_orthonormal(cs_hamiltonian):
    spec = mfgm.solve_bound(cs_hamiltonian)
    assert spec.count == CS_COUNT
    w = cs_hamiltonian.grid.weights
    V = np.column_stack([spec.state(v).values for v in range(0, spec.count, 5)])
    overlap = V.T @ (V * w[:, None])
    assert np.allclose(overlap, np.eye(overlap.shape[0]), atol=1e-10)
    assert np.all(np.diff(spec.energies) > 0)


def test_constant_envelope_gives_uniform_jacobian():
    grid = mfgm.build_grid(P.zero_potential(), 2.0, 1.0, 0.0, 50.0, beta=3.0)
    assert np.allclose(grid.J, grid.J[0], rtol=1e-10)
    assert np.allclose(np.diff(grid.R), grid.J[0], rtol=1e-8)
    # beta points per half wavelength
    k = math.sqrt(2 * 2.0 * 1.0)
    assert grid.N == math.ceil(3.0 * k * 50.0 / math.pi)


def test_density_follows_local_wavelength(cs, mu):
    grid = mfgm.build_grid(cs, mu, to_au(300, "uK"), 8.5, 2000.0, beta=6.0)
    R = grid.R
    # spacing is smallest at the bottom of the well, largest far out
    inner = grid.J[(R > 10.5) & (R < 12.0)].max()
    outer = grid.J[R > 1000.0].min()
    assert outer > 100 * inner


def test_e_env_below_envelope_rejected(cs, mu):
    with pytest.raises(ValueError, match="envelope minimum"):
        mfgm.build_grid(cs, mu, -1.0, 8.5, 100.0)


def test_coupled_zero_coupling_is_block_diagonal():
    mu = 1.0
    grid = mfgm.uniform_grid(96, 0.0, 20.0, mu)
    g, e = P.harmonic(1.0, 10.0), P.harmonic(4.0, 10.0, 3.0)
    H = mfgm.build_coupled_hamiltonian(grid, g, e, 0.0, 0.5)
    E = np.linalg.eigvalsh(H.matrix)[:6]
    single = np.sort(np.concatenate([np.arange(6) + 0.5, 2.0 * (np.arange(6) + 0.5) + 2.5]))[:6]
    assert np.allclose(E, single, atol=1e-10)


def test_constant_coupling_splits_degenerate_channels():
    mu, W = 1.0, 0.3
    grid = mfgm.uniform_grid(96, 0.0, 20.0, mu)
    h = P.harmonic(1.0, 10.0)
    H = mfgm.build_coupled_hamiltonian(grid, h, h, W, 0.0)
    E = np.linalg.eigvalsh(H.matrix)[:4]
    assert E[0] == pytest.approx(0.5 - W / 2, abs=1e-10)
    assert E[1] == pytest.approx(0.5 + W / 2, abs=1e-10)
    assert E[2] == pytest.approx(1.5 - W / 2, abs=1e-10)


def test_dressed_threshold_includes_light_shift():
    thr = mfgm.dressed_threshold(P.zero_potential(), P.zero_potential(), 0.2, -1.0, 100.0)
    e = 1.0
    assert thr == pytest.approx(0.5 * e - math.sqrt(0.25 * e * e + 0.01), rel=1e-14)
    assert mfgm.dressed_threshold(P.zero_potential(), P.zero_potential(), 0.0, -1.0, 100.0) == 0.0


def test_threshold_states_free_box():
    mu, L = 1000.0, 5000.0
    grid = mfgm.build_grid(P.zero_potential(), mu, 1e-8, 0.0, L, beta=4.0)
    H = mfgm.build_hamiltonian(grid, P.zero_potential())
    states = mfgm.threshold_states(H, (0.0, 1e-8))
    n = np.arange(1, len(states) + 1)
    exact = (n * math.pi / L) ** 2 / (2 * mu)
    assert len(states) > 5
    assert np.allclose([s.energy for s in states], exact, rtol=1e-10)
    for s, k in zip(states, n * math.pi / L):
        ref = math.sqrt(2 / L) * np.sin(k * s.R)
        assert np.max(np.abs(s.values - ref)) < 1e-8
        assert s.norm() == pytest.approx(1.0, rel=1e-12)


def test_hard_sphere_shifts_box_levels():
    mu, R0, L = 1000.0, 30.0, 5000.0
    grid = mfgm.build_grid(P.zero_potential(), mu, 1e-8, R0, L, beta=4.0)
    states = mfgm.threshold_states(mfgm.build_hamiltonian(grid, P.zero_potential()), (0.0, 1e-8))
    n = np.arange(1, len(states) + 1)
    assert np.allclose([s.energy for s in states], (n * math.pi / (L - R0)) ** 2 / (2 * mu),
                       rtol=1e-10)


def test_empty_window_reports_nearest():
    mu, L = 1000.0, 100.0
    grid = mfgm.uniform_grid(100, 0.0, L, mu)
    H = mfgm.build_hamiltonian(grid, P.zero_potential())
    states = mfgm.threshold_states(H, (0.0, 1e-9))
    assert states.status == "empty"
    E1 = (math.pi / L) ** 2 / (2 * mu)
    assert states.nearest_energy == pytest.approx(E1, rel=1e-8)
    with pytest.raises(ValueError):
        mfgm.threshold_states(H, (-1.0, 1.0))


def test_absorber_zero_strength_is_identity(cs_hamiltonian):
    assert mfgm.add_absorber(cs_hamiltonian, 0.0, 10000.0) is cs_hamiltonian


def test_absorber_makes_decaying_eigenvalues():
    mu, L = 1.0, 60.0
    grid = mfgm.uniform_grid(200, 0.0, L, mu)
    H = mfgm.add_absorber(mfgm.build_hamiltonian(grid, P.zero_potential()), 0.05, 40.0)
    assert H.is_complex
    E = np.linalg.eigvals(H.matrix)
    assert np.all(E.imag < 0)
    with pytest.raises(ValueError, match="real symmetric"):
        mfgm.solve_bound(H)


def test_refinement_keeps_eigenpair(cs_hamiltonian):
    s = mfgm.threshold_states(cs_hamiltonian, (0.0, 0.2 * UK), refine=False)[0]
    v = s.values * np.sqrt(cs_hamiltonian.grid.weights)
    E, w = mfgm.refine_eigenpair(cs_hamiltonian, s.energy, v)
    assert E == pytest.approx(s.energy, rel=1e-6)
    assert abs(np.dot(v, w)) == pytest.approx(1.0, abs=1e-6)


def test_energy_normalization_scales_by_density():
    mu, L = 1000.0, 5000.0
    grid = mfgm.uniform_grid(800, 0.0, L, mu)
    states = mfgm.threshold_states(mfgm.build_hamiltonian(grid, P.zero_potential()), (0.0, 5e-8))
    norm = mfgm.energy_normalize(states)
    # energy-normalised free waves have amplitude sqrt(2 mu / (pi k))
    s = norm[5]
    k = math.sqrt(2 * mu * s.energy)
    assert np.max(np.abs(s.values)) == pytest.approx(math.sqrt(2 * mu / (math.pi * k)), rel=0.02)
    assert s.norm_convention == "energy_normalized"
    with pytest.raises(ValueError):
        mfgm.energy_normalize(states[:1])


def test_grid_validation():
    with pytest.raises(ValueError):
        mfgm.MappedGrid(np.array([0.0, 2.0, 1.0]), np.ones(3), 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        mfgm.build_grid(P.zero_potential(), 1.0, 1.0, 5.0, 1.0)
    with pytest.raises(ValueError):
        mfgm.build_grid(P.zero_potential(), 1.0, 1.0, 0.0, 10.0, beta=0.5)
