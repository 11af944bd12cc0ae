import math

import numpy as np
import pytest

from coldcoll import potentials as P
from coldcoll import scattering as S
from coldcoll import surrogates as su
from coldcoll.units import isotope, to_au
from oracles import CS_A_ZERO_ENERGY, CS_COUNT, CS_PHI_OVER_PI

UK = to_au(1.0, "uK")


def square_well_a(mu, V0, R0):
    K = math.sqrt(2 * mu * V0)
    return R0 * (1 - math.tan(K * R0) / (K * R0))


def test_hard_sphere(mu):
    r = S.scattering_length_zero_energy(P.hard_sphere(12.0), mu)
    assert r.a == pytest.approx(12.0, rel=1e-8)
    assert r.node_count == 0


@pytest.mark.parametrize("V0_cm, R0", [(1.0, 20.0), (0.3, 35.0), (2.0, 15.0)])
def test_square_well_closed_form(mu, V0_cm, R0):
    V0 = to_au(V0_cm, "cm-1")
    r = S.scattering_length_zero_energy(P.square_well(V0, R0), mu)
    assert r.a == pytest.approx(square_well_a(mu, V0, R0), rel=1e-6)


def test_square_well_semiclassical_phase(mu):
    V0, R0 = to_au(1.0, "cm-1"), 20.0
    ph = S.semiclassical_phase(P.square_well(V0, R0), mu)
    assert ph.phi == pytest.approx(math.sqrt(2 * mu * V0) * R0, rel=1e-12)


def test_zero_potential(mu):
    r = S.scattering_length_zero_energy(P.zero_potential(), mu, R_max=1000.0)
    assert abs(r.a) < 1e-6
    assert S.semiclassical_phase(P.zero_potential(), mu).phi == 0.0


def test_cs_model_reference_values(cs, mu):
    r = S.scattering_length_zero_energy(cs, mu)
    assert r.a == pytest.approx(CS_A_ZERO_ENERGY, abs=0.01)
    assert r.node_count == CS_COUNT
    assert r.fit_residual < S.RESIDUAL_THRESHOLD
    ph = S.semiclassical_phase(cs, mu)
    assert ph.phi_over_pi == pytest.approx(CS_PHI_OVER_PI, abs=1e-9)
    assert ph.bound_count_semiclassical == CS_COUNT


def test_phase_method_agrees_with_zero_energy(cs, mu):
    a0 = S.scattering_length_zero_energy(cs, mu).a
    r = S.scattering_length_phase(cs, mu, [0.02 * UK, 0.04 * UK, 0.08 * UK])
    assert r.a == pytest.approx(a0, rel=1e-3)
    assert r.node_count == CS_COUNT


def test_phase_method_leaves_threshold_regime(cs, mu):
    with pytest.raises(ValueError, match="threshold regime"):
        S.scattering_length_phase(cs, mu, [50 * UK, 100 * UK])


def test_grid_method_matches_numerov(cs, mu):
    a0 = S.scattering_length_zero_energy(cs, mu).a
    r = S.scattering_length_grid(cs, mu, R_min=8.5)
    assert r.a == pytest.approx(a0, rel=1e-4)
    assert r.warnings == ()


def test_grid_method_warns_on_discontinuity(mu):
    r = S.scattering_length_grid(P.square_well(to_au(1.0, "cm-1"), 20.0), mu)
    assert "discontinuous" in r.warnings[0]


def test_effective_range_fit_recovers_parameters():
    a, r = -120.0, 85.0
    ks = np.array([1e-4, 2e-4, 3e-4])
    deltas = np.arctan(ks / (-1 / a + r * ks**2 / 2))
    fa, fr, resid = S.effective_range_fit(ks, deltas)
    assert fa == pytest.approx(a, rel=1e-10)
    assert fr == pytest.approx(r, rel=1e-6)
    assert resid < 1e-10


def test_asymptotic_phase():
    R = np.linspace(100.0, 200.0, 500)
    for d, expected in ((-1.2, -1.2), (0.0, 0.0), (0.7, 0.7), (2.0, 2.0 - math.pi)):
        u = -3.0 * np.sin(0.3 * R + d)
        assert S.asymptotic_phase(R, u, 0.3, 120.0, 190.0) == pytest.approx(expected, abs=1e-12)


def test_gribakin_flambaum_estimate(cs, mu):
    ph = S.semiclassical_phase(cs, mu)
    est = S.gribakin_flambaum_a(ph.phi, mu, su.CS_C6)
    assert est == pytest.approx(S.scattering_length_zero_energy(cs, mu).a, rel=0.02)


def test_isotope_scan_labels_and_masses(cs):
    isos = [isotope(x) for x in ("133Cs", "135Cs", "137Cs")]
    res = S.isotope_scan(cs, isos)
    assert [r.label for r in res] == ["133Cs", "135Cs", "137Cs"]
    assert [r.mu for r in res] == [i.reduced_mass_pair for i in isos]
    counts = [r.node_count for r in res]
    assert counts == sorted(counts)
    with pytest.raises(ValueError):
        S.isotope_scan(cs, isos, method="bogus")


def test_count_consistency_cs(cs, mu):
    rep = S.bound_count_consistency(cs, mu)
    assert rep.consistent
    assert rep.lines()[:3] == [f"semiclassical = {CS_COUNT}", f"numerov = {CS_COUNT}",
                               f"mfgm = {CS_COUNT}"]


def test_count_consistency_morse():
    mu, De, a = 1000.0, to_au(500.0, "cm-1"), 0.5
    lam = math.sqrt(2 * mu * De) / a
    rep = S.bound_count_consistency(P.morse(De, a, 8.0), mu)
    assert (rep.semiclassical, rep.numerov, rep.mfgm) == (int(lam - 0.5) + 1,) * 3


def test_count_consistency_free():
    rep = S.bound_count_consistency(P.zero_potential(), 1000.0)
    assert (rep.semiclassical, rep.numerov, rep.mfgm) == (0, 0, 0)


def test_depth_scan_adds_levels_one_at_a_time(mu):
    depths = np.linspace(0.9, 1.0, 12) * su.CS_DEPTH
    counts = [S.inverse_scattering_length(su.cs_ground(d), mu)[1] for d in depths]
    assert np.all(np.diff(counts) >= 0) and np.all(np.diff(counts) <= 1)
    assert counts[-1] - counts[0] >= 1


def test_tail_dominates_far_out(cs, mu):
    # moving R_max does not move a once the tail is fitted far enough out
    a1 = S.scattering_length_zero_energy(cs, mu, R_max=20000.0).a
    a2 = S.scattering_length_zero_energy(cs, mu, R_max=40000.0).a
    assert a2 == pytest.approx(a1, abs=0.05)


def test_mean_scattering_length_scaling():
    a1 = S.mean_scattering_length(1000.0, -6000.0)
    assert S.mean_scattering_length(16000.0, -6000.0) == pytest.approx(2 * a1, rel=1e-14)
    assert S.mean_scattering_length(1000.0, -96000.0) == pytest.approx(2 * a1, rel=1e-14)


def test_results_csv_rows(cs, mu):
    r = S.scattering_length_zero_energy(cs, mu, label="x")
    rows = S.results_csv([r])
    assert rows[0] == S.CSV_HEADER
    assert rows[1][0] == "x" and rows[1][1] == "zero_energy_node"
