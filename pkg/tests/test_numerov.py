import math

import numpy as np
import pytest

from coldcoll import numerov
from coldcoll import potentials as P


def test_free_solution_is_sine():
    mu, E = 1.0, 0.5
    k = math.sqrt(2 * mu * E)
    res = numerov.propagate(P.zero_potential(), mu, E, 0.0, 30.0, h=1e-3)
    ref = np.sin(k * res.R)
    c = np.dot(res.u, ref) / np.dot(ref, ref)
    assert np.max(np.abs(res.u - c * ref)) < 1e-8
    assert res.node_count == math.floor(k * 30.0 / math.pi)


def test_harmonic_ground_state_log_derivative():
    # at E = omega / 2 the outward solution from a far-left node decays as the
    # Gaussian, log-derivative -(R - R0) at R beyond the centre
    mu, R0 = 1.0, 10.0
    res = numerov.propagate(P.harmonic(1.0, R0), mu, 0.5, 2.0, 11.0, h=1e-3)
    assert res.log_derivative == pytest.approx(-(11.0 - R0), rel=1e-5)
    assert res.node_count == 0


def test_morse_node_count_equals_levels():
    mu, De, a, Re = 1.0, 50.0, 0.5, 8.0
    lam = math.sqrt(2 * mu * De) / a
    res = numerov.zero_energy_solution(P.morse(De, a, Re), mu, 1.0, 200.0)
    assert res.node_count == int(lam - 0.5) + 1


def test_zero_potential_phase_shift():
    mu, E = 1.0, 0.02
    k = math.sqrt(2 * mu * E)
    res = numerov.propagate(P.zero_potential(), mu, E, 0.0, 80.0)
    ps = numerov.phase_shift(res, k, 1.0)
    assert abs(ps.delta) < 1e-8
    assert ps.n_pi == 0


def test_hard_sphere_phase_shift():
    mu, E, R0 = 1.0, 0.02, 3.0
    k = math.sqrt(2 * mu * E)
    res = numerov.propagate(P.zero_potential(), mu, E, R0, 80.0)
    ps = numerov.phase_shift(res, k, R0 + 1)
    expected = (-k * R0 + math.pi / 2) % math.pi - math.pi / 2
    assert ps.delta == pytest.approx(expected, abs=1e-8)
    assert ps.total == pytest.approx(-k * R0, abs=1e-8)


def test_square_well_phase_shift():
    mu, E, V0, R0 = 1.0, 0.01, 0.3, 5.0
    k = math.sqrt(2 * mu * E)
    K = math.sqrt(2 * mu * (E + V0))
    exact = math.atan(k / K * math.tan(K * R0)) - k * R0
    exact = (exact + math.pi / 2) % math.pi - math.pi / 2
    errs = []
    for kh in (0.004, 0.002):
        res = numerov.propagate(P.square_well(V0, R0), mu, E, 0.0, 60.0, kh=kh)
        errs.append(abs(numerov.phase_shift(res, k, R0 + 1).delta - exact))
    assert errs[1] < 1e-7
    # second order across the step in V
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.25)


def test_richardson_fourth_order():
    mu, E = 1.0, 0.5
    curve = P.morse(2.0, 1.0, 3.0)
    lds = [numerov.propagate(curve, mu, E, 1.0, 8.0, h=h).log_derivative for h in (0.02, 0.01, 0.005)]
    ratio = (lds[0] - lds[1]) / (lds[1] - lds[2])
    assert ratio == pytest.approx(16.0, rel=0.1)


def test_step_too_large_rejected():
    with pytest.raises(ValueError, match="violates"):
        numerov.propagate(P.square_well(10.0, 5.0), 1.0, 0.0, 0.0, 10.0, h=0.5)


def test_adaptive_mesh_doubles_and_ends_on_r_end():
    R, hs = numerov.adaptive_mesh(P.model_c6_well(1e-3, 11.0, -6331.0), 1e5, 0.0, 8.0, 20000.0)
    assert R[0] == 8.0 and R[-1] == pytest.approx(20000.0, rel=1e-14)
    ratio = hs[1:] / hs[:-1]
    assert np.all(np.isclose(ratio, 1.0) | np.isclose(ratio, 2.0))
    assert len(R) < 200000


def test_bad_inputs():
    with pytest.raises(ValueError):
        numerov.propagate(P.zero_potential(), 1.0, 1.0, 5.0, 1.0)
    res = numerov.propagate(P.zero_potential(), 1.0, 0.5, 0.0, 10.0)
    with pytest.raises(ValueError):
        numerov.phase_shift(res, -1.0, 1.0)
    with pytest.raises(ValueError):
        numerov.phase_shift(res, 1.0, 20.0)
