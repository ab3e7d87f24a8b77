import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sshprobe.boundstates import (
    FiniteSizeWarning,
    classify_numeric_bound_states,
    dephasing_bound_states,
    dephasing_bs_wavefunction,
    dissipative_bound_states,
    dissipative_bs_wavefunction,
    dissipative_cubic,
    estimate_localization,
    existence_thresholds,
    in_gap_state,
)
from sshprobe.dynamics import eigendecompose
from sshprobe.lattice import (
    ChainSpec,
    a_site,
    b_site,
    band_dispersion,
    build_defect_hamiltonian,
    build_dissipative_hamiltonian,
)


def _out_of_band(spec, margin=1e-4):
    h = build_defect_hamiltonian(spec) if spec.model == "dephasing" else build_dissipative_hamiltonian(spec)
    es = eigendecompose(h)
    band = band_dispersion(spec.t1, spec.t2)
    mask = band.outside_bands(es.eigenvalues, margin * (spec.t1 + spec.t2))
    return es, np.flatnonzero(mask)


# ---- dephasing closed forms


def test_topological_reference_point():
    states = dephasing_bound_states(1.0, 1.5, 0.8)
    assert [s.parity for s in states] == ["symmetric", "symmetric"]
    lo, hi = states
    assert lo.energy == pytest.approx(-0.4462, abs=1e-4)
    assert lo.localization == pytest.approx(-1.202, abs=1e-3)
    assert hi.energy == pytest.approx(2.8017, abs=1e-4)
    assert hi.localization == pytest.approx(2.695, abs=1e-3)
    es, idx = _out_of_band(ChainSpec(200, 1.0, 1.5, 0.8))
    np.testing.assert_allclose(es.eigenvalues[idx], [lo.energy, hi.energy], atol=1e-9)


def test_trivial_reference_point():
    states = dephasing_bound_states(1.5, 1.0, 1.2)
    parities = {s.parity: s for s in states}
    assert len(states) == 2
    assert parities["symmetric"].energy == pytest.approx(3.1345, abs=2e-4)
    assert parities["symmetric"].localization == pytest.approx(4.142, abs=1e-3)
    assert parities["antisymmetric"].energy == pytest.approx(-0.1637, abs=1e-4)
    assert parities["antisymmetric"].localization == pytest.approx(-1.467, abs=1e-3)
    # the discarded antisymmetric candidate has X = -0.782
    assert all(abs(s.localization + 0.782) > 0.1 for s in states)


def test_four_states_regime():
    states = dephasing_bound_states(0.3, 1.0, 0.8)
    assert len(states) == 4
    assert sorted(s.parity for s in states) == ["antisymmetric"] * 2 + ["symmetric"] * 2


def test_c0_formula():
    for args in [(1, 1.5, 0.8), (1.5, 1, 1.2), (0.3, 1, 0.8)]:
        for s in dephasing_bound_states(*args):
            x, y = s.localization, s.imbalance
            assert s.amplitudes["c0"] == pytest.approx(math.sqrt((1 - x ** -2) / (2 * (1 + y * y))))


def test_weak_coupling_energies_approach_band_edges():
    states = dephasing_bound_states(1.0, 1.5, 1e-4)
    np.testing.assert_allclose([s.energy for s in states], [-0.5, 2.5], atol=1e-3)


def test_flat_band_limit():
    for g in (0.5, 1.5, 3.0):
        e = sorted(s.energy for s in dephasing_bound_states(1.0, 1e-6, g))
        np.testing.assert_allclose(e, [g - 1.0, g + 1.0], atol=1e-5)


def test_gamma_equal_t1_is_regular():
    states = dephasing_bound_states(1.0, 0.5, 1.0)
    anti = [s for s in states if s.parity == "antisymmetric"]
    assert len(anti) == 1
    assert anti[0].energy == 0.0
    assert anti[0].localization == pytest.approx(-2.0)
    near = [s for s in dephasing_bound_states(1.0, 0.5, 1.0 + 1e-9) if s.parity == "antisymmetric"]
    assert near[0].energy == pytest.approx(0.0, abs=1e-8)


def test_wavefunction_symmetry_and_overlap():
    n = 200
    spec = ChainSpec(n, 1.0, 1.5, 0.8)
    es = eigendecompose(build_defect_hamiltonian(spec))
    for bs in dephasing_bound_states(1.0, 1.5, 0.8):
        psi = dephasing_bs_wavefunction(bs, n)
        for m in range(-n // 2 + 1, n // 2):
            assert psi[a_site(m, n)] == psi[b_site(-m, n)]
        k = np.argmin(np.abs(es.eigenvalues - bs.energy))
        overlap = abs(psi @ es.eigenvectors[:, k]) / np.linalg.norm(psi)
        assert overlap > 1 - 1e-6
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-6)


def test_wavefunction_is_eigenvector():
    n = 120
    for args in [(1.5, 1, 1.2), (0.3, 1, 0.8)]:
        h = build_defect_hamiltonian(ChainSpec(n, *args)).entries
        for bs in dephasing_bound_states(*args):
            psi = dephasing_bs_wavefunction(bs, n)
            tail = abs(bs.localization) ** (-(n // 2 - 1))
            assert np.linalg.norm(h @ psi - bs.energy * psi) < 1e-9 + 10 * tail


def test_input_validation():
    for fn in (dephasing_bound_states, dissipative_bound_states):
        with pytest.raises(ValueError):
            fn(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        existence_thresholds(0.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(t1=st.floats(0.2, 2.0), t2=st.floats(0.2, 2.0), g=st.floats(0.05, 4.0))
def test_count_table(t1, t2, g):
    assume(abs(t1 - t2) > 1e-3 and abs(t1 - g / 2) > 1e-3 and abs(g - t1) > 1e-6)
    states = dephasing_bound_states(t1, t2, g)
    n_sym = sum(s.parity == "symmetric" for s in states)
    n_anti = len(states) - n_sym
    if t1 > t2:
        assert (n_sym, n_anti) == (1, 1)
    elif t1 > g / 2:
        assert (n_sym, n_anti) == (2, 0)
    else:
        assert (n_sym, n_anti) == (2, 2)


@settings(max_examples=30, deadline=None)
@given(t1=st.floats(0.3, 2.0), t2=st.floats(0.3, 2.0), g=st.floats(0.1, 3.0))
def test_closed_form_energy_identity(t1, t2, g):
    # E = g~ (1 + t2 / (t1 X)) is an independent route to the same energy
    for s in dephasing_bound_states(t1, t2, g):
        sign = 1 if s.parity == "symmetric" else -1
        g_eff = g + sign * t1
        assert s.energy == pytest.approx(g_eff * (1 + t2 / (t1 * s.localization)), abs=1e-10)


# ---- dissipative closed forms


def _cubic_residuals(t1, t2, g, bs):
    x, e = bs.localization, bs.energy
    r1 = e * e - (t1 ** 2 + t2 ** 2 + t1 * t2 * (x + 1 / x))
    r2 = e - (t1 + t2 * x - 2 * g * g / t1)
    return abs(r1), abs(r2)


def test_dissipative_topological_point():
    states = dissipative_bound_states(1.0, 2.0, 1.0)
    assert len(states) == 2
    zero = [s for s in states if s.mode == "Ia"][0]
    assert zero.energy == 0.0 and zero.localization == -2.0
    assert zero.amplitudes["q0"] / zero.amplitudes["c1"] == pytest.approx(1.0)
    other = [s for s in states if s.mode == "IIa"][0]
    assert other.localization == pytest.approx(2.08, abs=0.02)
    assert other.energy == pytest.approx(3.16, abs=0.03)
    es, idx = _out_of_band(ChainSpec(200, 1.0, 2.0, 1.0, "dissipative"))
    np.testing.assert_allclose(es.eigenvalues[idx], [0.0, other.energy], atol=1e-8)


@pytest.mark.parametrize("g, modes", [(3.0, ["IIIb", "IIb"]), (0.5, ["Ib", "IIb"])])
def test_dissipative_trivial_points(g, modes):
    states = dissipative_bound_states(2.0, 1.0, g)
    assert [s.mode for s in states] == modes
    assert all(s.energy != 0.0 for s in states)
    es, idx = _out_of_band(ChainSpec(200, 2.0, 1.0, g, "dissipative"))
    np.testing.assert_allclose(es.eigenvalues[idx], [s.energy for s in states], atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(t1=st.floats(0.2, 2.0), t2=st.floats(0.2, 2.0), g=st.floats(0.05, 4.0))
def test_cubic_roots_satisfy_both_relations(t1, t2, g):
    for bs in dissipative_bound_states(t1, t2, g):
        if bs.mode.startswith("Ia"):
            continue
        r1, r2 = _cubic_residuals(t1, t2, g, bs)
        assert r1 < 1e-10 * max(1, bs.energy ** 2)
        assert r2 < 1e-10 * max(1, abs(bs.energy))
        assert abs(np.polyval(dissipative_cubic(t1, t2, g), bs.localization)) < 1e-9 * max(
            1, abs(bs.localization) ** 3)


@settings(max_examples=60, deadline=None)
@given(t1=st.floats(0.2, 2.0), t2=st.floats(0.2, 2.0), g=st.floats(0.05, 4.0))
def test_count_follows_region_map(t1, t2, g):
    reg = existence_thresholds(t1, t2)
    assume(abs(t1 - t2) > 1e-3 and abs(g - reg.gamma1) > 1e-3)
    assume(reg.gamma2 is None or abs(g - reg.gamma2) > 1e-3)
    states = dissipative_bound_states(t1, t2, g)
    assert sorted(s.mode for s in states) == sorted(reg.modes(g))
    assert any(s.energy == 0.0 for s in states) == (t2 > t1)


def test_dissipative_wavefunction():
    n = 160
    for args in [(1.0, 2.0, 1.0), (2.0, 1.0, 3.0), (2.0, 1.0, 0.5)]:
        h = build_dissipative_hamiltonian(ChainSpec(n, *args, model="dissipative")).entries
        for bs in dissipative_bound_states(*args):
            psi = dissipative_bs_wavefunction(bs, n)
            assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-8)
            assert np.linalg.norm(h @ psi - bs.energy * psi) < 1e-8


def test_thresholds():
    r = existence_thresholds(1, 2)
    assert r.gamma1 == pytest.approx(math.sqrt(3)) and r.gamma2 is None and r.topological
    r = existence_thresholds(2, 1)
    assert r.gamma1 == pytest.approx(2.4495, abs=1e-4) and r.gamma2 == pytest.approx(1.4142, abs=1e-4)
    r = existence_thresholds(1, 1)
    assert r.gamma1 == pytest.approx(math.sqrt(2)) and r.gamma2 == 0.0
    assert existence_thresholds(1, 1 - 1e-10).gamma2 < 1e-4


@settings(max_examples=40, deadline=None)
@given(t1=st.floats(0.1, 3), t2=st.floats(0.1, 3))
def test_threshold_order(t1, t2):
    r = existence_thresholds(t1, t2)
    assert r.gamma2 is None or r.gamma1 >= r.gamma2


def test_zero_mode_protected():
    for ratio in (0.1, 0.3, 0.5, 0.7, 0.8):
        es = eigendecompose(build_dissipative_hamiltonian(ChainSpec(200, ratio, 1.0, 0.9, "dissipative")))
        assert np.min(np.abs(es.eigenvalues)) < 1e-8


# ---- numeric detection


def test_numeric_parity_labels():
    h = build_defect_hamiltonian(ChainSpec(200, 1.0, 1.5, 0.8))
    found = classify_numeric_bound_states(h)
    assert len(found) == 2
    assert all(b.parity_index > 1 - 1e-8 and b.parity == "symmetric" for b in found)
    h = build_defect_hamiltonian(ChainSpec(200, 1.5, 1.0, 1.2))
    in_gap = [b for b in classify_numeric_bound_states(h) if abs(b.energy) < 0.5]
    assert len(in_gap) == 1 and in_gap[0].parity_index < 1e-8
    assert in_gap[0].parity == "antisymmetric"


@pytest.mark.parametrize("args, model", [((1.0, 1.5, 0.8), "dephasing"), ((1.5, 1.0, 1.2), "dephasing"),
                                         ((0.3, 1.0, 0.8), "dephasing"), ((1.0, 2.0, 1.0), "dissipative"),
                                         ((2.0, 1.0, 3.0), "dissipative")])
def test_localization_fit(args, model):
    spec = ChainSpec(200, *args, model=model)
    h = build_defect_hamiltonian(spec) if model == "dephasing" else build_dissipative_hamiltonian(spec)
    analytic = (dephasing_bound_states if model == "dephasing" else dissipative_bound_states)(*args)
    numeric = classify_numeric_bound_states(h)
    assert len(numeric) == len(analytic)
    for a in analytic:
        b = min(numeric, key=lambda s: abs(s.energy - a.energy))
        assert b.localization == pytest.approx(a.localization, rel=0.01)


def test_finite_size_warning():
    # X close to 1: the state is not contained in a short ring
    h = build_defect_hamiltonian(ChainSpec(30, 1.0, 1.5, 0.05))
    with pytest.warns(FiniteSizeWarning):
        classify_numeric_bound_states(h)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        classify_numeric_bound_states(h, warn=False)


def test_estimate_localization_pure_exponential():
    n = 80
    psi = np.zeros(2 * n)
    cells = np.arange(n // 2)
    psi[2 * cells] = (-1.5) ** (-cells.astype(float))
    assert estimate_localization(psi, n) == pytest.approx(-1.5, rel=1e-9)


def test_in_gap_state_ordered():
    for t2, parity in ((0.8, 0.0), (1.2, 1.0)):
        h = build_defect_hamiltonian(ChainSpec(101, 1.0, t2, 0.8))
        es = eigendecompose(h)
        k = in_gap_state(h, es)
        assert abs(es.eigenvalues[k]) < abs(1 - t2)
        from sshprobe.dynamics import parity_index

        assert parity_index(es.eigenvectors[:, k]) == pytest.approx(parity, abs=1e-6)
