import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optocascade.model import (
    HBAR,
    InvalidParameterError,
    PhysicalParams,
    SimParams,
    bare_coupling,
    build_drift_matrix,
    derived_rates,
    effective_coupling,
    is_oscillatory,
    normal_mode_frequencies,
)

BASE = SimParams(kappa=1.0, gamma=0.9, mu=0.001, omega_m=4.4, delta=1.02 * 4.4, g=1.5)
PHYS = PhysicalParams(omega_c=1.77e15, cavity_length=0.025, eff_mass=1.45e-10, omega_m_phys=5.95e6)

# (1.77e15 / 0.025) * sqrt(hbar / (1.45e-10 * 5.95e6)) evaluated by hand
G_CODATA = 24.75305769571471
G_HBAR_4DIGIT = 24.753388451170615  # same with hbar = 1.0546e-34


def test_bare_coupling_value():
    assert HBAR == 1.054571817e-34
    assert bare_coupling(PHYS) == pytest.approx(G_CODATA, rel=1e-12)
    # the 5-digit hbar only moves the result in the sixth digit
    assert bare_coupling(PHYS) == pytest.approx(G_HBAR_4DIGIT, rel=2e-5)


def test_bare_coupling_scaling():
    g0 = bare_coupling(PHYS)
    heavier = PhysicalParams(PHYS.omega_c, PHYS.cavity_length, 2 * PHYS.eff_mass, PHYS.omega_m_phys)
    longer = PhysicalParams(PHYS.omega_c, 2 * PHYS.cavity_length, PHYS.eff_mass, PHYS.omega_m_phys)
    assert bare_coupling(heavier) == pytest.approx(g0 / math.sqrt(2), rel=1e-14)
    assert bare_coupling(longer) == pytest.approx(g0 / 2, rel=1e-14)
    assert bare_coupling(PHYS) == g0


@pytest.mark.parametrize("field", ["omega_c", "cavity_length", "eff_mass", "omega_m_phys"])
@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_physical_params_reject_non_positive(field, bad):
    values = dict(omega_c=1.0, cavity_length=1.0, eff_mass=1.0, omega_m_phys=1.0)
    values[field] = bad
    with pytest.raises(InvalidParameterError):
        PhysicalParams(**values)


def test_effective_coupling():
    assert effective_coupling(2.0, 3.0) == 6.0
    assert effective_coupling(2.5, 0.0) == 0.0
    assert effective_coupling(2.5, 1.0) == 2.5
    with pytest.raises(InvalidParameterError):
        effective_coupling(2.0, -0.1)


@pytest.mark.parametrize(
    "changes",
    [dict(kappa=-1.0), dict(gamma=-0.1), dict(mu=-1e-3), dict(nbar=-1.0), dict(omega_m=0.0), dict(g=-0.5),
     dict(delta=float("nan"))],
)
def test_sim_params_invariants(changes):
    with pytest.raises(InvalidParameterError):
        BASE.replace(**changes)


def test_derived_rates():
    r = derived_rates(BASE)
    assert r.kappa_t == complex(0.5, 4.488)
    assert r.mu_t == complex(0.0005, 4.4)
    assert r.sigma == complex(0.95, 2 * 4.488)
    assert r.tau_plus == complex((0.001 + 0.9) / 2, 4.4 + 4.488)
    assert r.tau_minus == complex((0.001 + 0.9) / 2, 4.4 - 4.488)


def test_drift_matrix_reference_entries():
    k = build_drift_matrix(BASE)
    assert k[0, 2] == -1.5j
    assert k[0, 0] == pytest.approx(-(4.488j + 0.5), abs=1e-15)
    expected = np.array(
        [
            [-(0.5 + 4.488j), 0, -1.5j, -1.5j],
            [0, -(0.5 - 4.488j), 1.5j, 1.5j],
            [-1.5j, -1.5j, -(0.0005 + 4.4j), 0],
            [1.5j, 1.5j, 0, -(0.0005 - 4.4j)],
        ]
    )
    np.testing.assert_allclose(k, expected, atol=1e-15)


def test_drift_matrix_zero_coupling_is_diagonal():
    k = build_drift_matrix(BASE.replace(g=0.0))
    r = derived_rates(BASE)
    np.testing.assert_array_equal(k, np.diag([-r.kappa_t, -r.kappa_t.conjugate(), -r.mu_t, -r.mu_t.conjugate()]))


def test_rwa_drift_keeps_only_exchange_terms():
    k = build_drift_matrix(BASE.replace(rwa=True))
    # da/dt = -ig b, da†/dt = ig b†, db/dt = -ig a, db†/dt = ig a†
    assert k[0, 2] == -1.5j and k[1, 3] == 1.5j and k[2, 0] == -1.5j and k[3, 1] == 1.5j
    for j, l in ((0, 3), (1, 2), (2, 1), (3, 0)):
        assert k[j, l] == 0


def test_normal_modes_reference_values():
    nm = normal_mode_frequencies(BASE)
    assert nm.omega_plus.real == pytest.approx(5.752230288244042, abs=1e-12)
    assert nm.omega_minus.real == pytest.approx(2.5325857756466754, abs=1e-12)
    assert nm.oscillatory


def test_normal_modes_uncoupled():
    nm = normal_mode_frequencies(BASE.replace(g=0.0))
    assert nm.omega_plus == pytest.approx(4.488, abs=1e-14)
    assert nm.omega_minus == pytest.approx(4.4, abs=1e-14)
    nm = normal_mode_frequencies(BASE.replace(g=0.0, delta=3.0))
    assert nm.omega_plus == pytest.approx(4.4) and nm.omega_minus == pytest.approx(3.0)


@pytest.mark.parametrize("delta,omega_m,g", [(1.0, 1.0, 0.5), (4.0, 1.0, 1.0), (2.0, 8.0, 2.0)])
def test_normal_modes_threshold(delta, omega_m, g):
    assert 4 * g * g == delta * omega_m
    nm = normal_mode_frequencies(SimParams(delta=delta, omega_m=omega_m, g=g))
    assert abs(nm.omega_minus) <= 1e-12
    assert nm.oscillatory


def test_is_oscillatory_examples():
    assert is_oscillatory(BASE)
    assert is_oscillatory(BASE.replace(g=0.0))
    g = math.sqrt(BASE.delta * BASE.omega_m)
    assert not is_oscillatory(BASE.replace(g=g))
    assert not is_oscillatory(SimParams(g=3.0, delta=1.0, omega_m=1.0))


params = st.builds(
    SimParams,
    kappa=st.floats(0.05, 5.0),
    gamma=st.floats(0.0, 2.0),
    mu=st.floats(1e-4, 1.0),
    nbar=st.floats(0.0, 100.0),
    omega_m=st.floats(0.5, 10.0),
    delta=st.floats(0.1, 10.0),
    g=st.floats(0.0, 5.0),
    rwa=st.booleans(),
)


@settings(max_examples=200, deadline=None)
@given(params)
def test_oscillatory_flag_matches_squared_frequencies(p):
    d2, w2 = p.delta**2, p.omega_m**2
    disc = (d2 - w2) ** 2 + 16 * p.g**2 * p.delta * p.omega_m
    minus_sq = 0.5 * (d2 + w2 - math.sqrt(disc))
    # away from round-off at the threshold the two code paths must agree
    if abs(4 * p.g**2 - p.delta * p.omega_m) > 1e-9 * p.delta * p.omega_m:
        assert is_oscillatory(p) == (minus_sq >= 0)
    nm = normal_mode_frequencies(p)
    assert nm.oscillatory == is_oscillatory(p)
    if nm.oscillatory:
        assert abs(nm.omega_plus.imag) < 1e-12 and abs(nm.omega_minus.imag) < 1e-12
        assert nm.omega_plus.real >= nm.omega_minus.real


@settings(max_examples=200, deadline=None)
@given(params)
def test_rwa_and_full_drift_share_diagonal(p):
    full = build_drift_matrix(p.replace(rwa=False))
    rwa = build_drift_matrix(p.replace(rwa=True))
    np.testing.assert_array_equal(np.diag(full), np.diag(rwa))


@settings(max_examples=300, deadline=None)
@given(params)
def test_drift_stable_in_oscillatory_regime(p):
    if p.kappa > 0 and p.mu > 0 and is_oscillatory(p):
        eig = np.linalg.eigvals(build_drift_matrix(p))
        assert np.max(eig.real) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 10.0), st.floats(0.5, 10.0))
def test_lower_mode_softens_with_coupling(delta, omega_m):
    gs = np.linspace(0.0, 3.0, 61)
    minus_sq = [normal_mode_frequencies(SimParams(delta=delta, omega_m=omega_m, g=g)).omega_minus ** 2 for g in gs]
    minus_sq = np.real(minus_sq)
    assert np.all(np.diff(minus_sq) <= 1e-12)
    plus = np.array([normal_mode_frequencies(SimParams(delta=delta, omega_m=omega_m, g=g)).omega_plus for g in gs])
    # continuity on the grid: no jumps larger than the local slope allows
    assert np.max(np.abs(np.diff(plus))) < 0.5


def test_degenerate_modes_are_ordered():
    w = 1.329724377420865
    nm = normal_mode_frequencies(SimParams(delta=w, omega_m=w, g=0.0, kappa=1.0, mu=1.0, gamma=0.0))
    assert nm.omega_plus.real >= nm.omega_minus.real
    assert nm.omega_plus == pytest.approx(w, rel=1e-15)
