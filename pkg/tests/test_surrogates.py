import math

import pytest

from coldcoll import coupling as C
from coldcoll import scattering as S
from coldcoll import surrogates as su
from coldcoll.units import from_au, to_au
from oracles import (CS_PHI_OVER_PI, REF_A_133, REF_COUNT, SCHEME1_CROSSING_R, SCHEME1_E_F_CM1)


def test_frozen_depth_matches_tuner():
    assert su.tune_depth() == pytest.approx(su.CS_DEPTH, rel=1e-13)


def test_ground_model_phase(cs, mu):
    assert S.semiclassical_phase(cs, mu).phi_over_pi == pytest.approx(CS_PHI_OVER_PI, abs=1e-9)
    assert cs.C6 == su.CS_C6
    assert float(cs(su.CS_R_MIN)) == pytest.approx(-su.CS_DEPTH, rel=1e-12)


def test_tune_depth_other_target(mu):
    d = su.tune_depth(50.3)
    assert S.semiclassical_phase(su.cs_ground(d), mu).phi_over_pi == pytest.approx(50.3, abs=1e-9)


def test_excited_asymptote_is_d2(excited):
    assert excited.asymptote == pytest.approx(C.CS_D2, rel=1e-14)
    assert from_au(C.CS_D2 - su.CS_D1, "cm-1") == pytest.approx(554.0389, abs=1e-3)


def test_reference_ground(mu):
    g = su.reference_ground()
    r = S.scattering_length_zero_energy(g, mu)
    assert r.a == pytest.approx(REF_A_133, abs=0.01)
    assert r.node_count == REF_COUNT
    # only the inner wall moves
    assert float(g(20.0)) == float(su.cs_ground()(20.0))


def test_synthetic_targets_reproduce_frozen_nodes():
    t = su.synthetic_targets()
    assert t.provenance == "experimental_target"
    assert t.detunings == pytest.approx(su.REFERENCE_NODES_CM, abs=1e-9)


def test_scheme1_geometry(mu):
    s = su.scheme1_system(0.0)
    assert from_au(s.E_f, "cm-1") == pytest.approx(SCHEME1_E_F_CM1, abs=0.01)
    Rc = C.crossing_radius(s)
    assert Rc == pytest.approx(SCHEME1_CROSSING_R, abs=1e-3)
    # the level placement nudges the crossing off the nominal -6 cm-1
    assert from_au(float(s.ground(Rc)), "cm-1") == pytest.approx(-6.0, abs=0.1)
    assert su.scheme1_system(1e6).field.intensity == 1e6


def test_scheme2_level_position(mu):
    s = su.scheme2_system(0.0)
    lv = C.feshbach_locate(s, mu)
    assert lv.v == 0
    assert lv.delta == pytest.approx(to_au(90.0, "MHz"), abs=to_au(1e-3, "MHz"))


def test_grid_config_builds(cs, mu):
    g = su.GridConfig(R_max=2000.0).build(cs, mu)
    assert g.R_max == 2000.0 and g.beta == 7.0
    assert math.isclose(g.E_env, to_au(300.0, "uK"))
