import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sshprobe.lattice import (
    ChainSpec,
    Disorder,
    a_site,
    b_site,
    band_dispersion,
    build_defect_hamiltonian,
    build_dissipative_hamiltonian,
    build_ssh_hamiltonian,
    mirror_permutation,
    sample_disorder,
)

hop = st.floats(0.1, 3.0)


def _dense_ssh(n_cells, t1, t2):
    """Loop-built oracle, independent of the vectorized builder."""
    h = np.zeros((2 * n_cells, 2 * n_cells))
    for n in range(n_cells):
        a, b = 2 * n, 2 * n + 1
        h[a, b] = h[b, a] = t1
        bp = 2 * ((n - 1) % n_cells) + 1
        h[a, bp] += t2
        h[bp, a] += t2
    return h


def test_matches_loop_oracle():
    for n in (3, 4, 7):
        h = build_ssh_hamiltonian(ChainSpec(n, 0.7, 1.3))
        np.testing.assert_array_equal(h.entries, _dense_ssh(n, 0.7, 1.3))


def test_decoupled_dimers():
    w = np.linalg.eigvalsh(build_ssh_hamiltonian(ChainSpec(3, 1.0, 0.0)).entries)
    np.testing.assert_allclose(w, [-1, -1, -1, 1, 1, 1], atol=1e-14)


def test_uniform_ring_n4():
    w = np.linalg.eigvalsh(build_ssh_hamiltonian(ChainSpec(4, 1.0, 1.0)).entries)
    m = np.arange(4)
    e = np.sqrt(2 + 2 * np.cos(np.pi * m / 2))
    np.testing.assert_allclose(w, np.sort(np.concatenate([e, -e])), atol=1e-12)


def test_gap_is_empty():
    w = np.linalg.eigvalsh(build_ssh_hamiltonian(ChainSpec(200, 1.0, 1.5)).entries)
    assert np.all(np.abs(w) >= 0.5 - 1e-12)
    assert np.min(np.abs(w)) < 0.5 + 1e-3


def test_bloch_spectrum():
    n = 12
    w = np.linalg.eigvalsh(build_ssh_hamiltonian(ChainSpec(n, 0.8, 1.9)).entries)
    k = 2 * np.pi * np.arange(n) / n
    band = band_dispersion(0.8, 1.9, k - np.pi)
    np.testing.assert_allclose(w, np.sort(np.concatenate([band.e_plus, band.e_minus])), atol=1e-12)


def test_defect_zero_gamma_is_bare():
    spec = ChainSpec(10, 1.0, 1.5, 0.0)
    np.testing.assert_array_equal(build_defect_hamiltonian(spec).entries,
                                  build_ssh_hamiltonian(spec).entries)


def test_defect_entries():
    h = build_defect_hamiltonian(ChainSpec(5, 1.0, 1.5, 0.8))
    d = np.diag(h.entries)
    assert d[0] == d[1] == 0.8
    assert np.all(d[2:] == 0)


def test_dissipative_zero_gamma_block_diagonal():
    spec = ChainSpec(6, 1.0, 2.0, 0.0, "dissipative")
    h = build_dissipative_hamiltonian(spec)
    assert h.dim == 13 and h.has_probe and h.n_cells == 6
    np.testing.assert_array_equal(h.entries[:-1, :-1], build_ssh_hamiltonian(spec).entries)
    assert not h.entries[-1].any()


def test_dissipative_probe_row():
    h = build_dissipative_hamiltonian(ChainSpec(6, 1.0, 2.0, 0.7, "dissipative"))
    row = h.entries[h.index("q")]
    assert row[h.index("a0")] == row[h.index("b0")] == 0.7
    assert np.count_nonzero(row) == 2


def test_model_mismatch():
    with pytest.raises(ValueError):
        build_defect_hamiltonian(ChainSpec(4, 1, 1, 1, "dissipative"))
    with pytest.raises(ValueError):
        build_dissipative_hamiltonian(ChainSpec(4, 1, 1, 1))


@pytest.mark.parametrize("kwargs", [
    dict(n_cells=1, t1=1, t2=1), dict(n_cells=4, t1=-1, t2=1), dict(n_cells=4, t1=1, t2=-1),
    dict(n_cells=4, t1=1, t2=1, gamma=-0.1), dict(n_cells=4, t1=1, t2=1, model="other"),
    dict(n_cells=4, t1=[1, 1], t2=1), dict(n_cells=4, t1=1, t2=1, boundary="open"),
    dict(n_cells=2.5, t1=1, t2=1),
])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        ChainSpec(**kwargs)


def test_disorder_validation():
    with pytest.raises(ValueError):
        Disorder(1.0)
    with pytest.raises(ValueError):
        sample_disorder(1.0, -0.1, 10, 0)


def test_site_wrapping():
    assert a_site(-1, 5) == 8 and b_site(-1, 5) == 9 and b_site(5, 5) == 1


def test_sample_disorder_zero():
    np.testing.assert_array_equal(sample_disorder(1.3, 0.0, 301, 7), np.full(301, 1.3))


def test_sample_disorder_bounds_and_seed():
    x = sample_disorder(1.0, 0.15, 301, 3)
    assert np.all((x > 0.85) & (x < 1.15))
    np.testing.assert_array_equal(x, sample_disorder(1.0, 0.15, 301, 3))
    assert not np.array_equal(x, sample_disorder(1.0, 0.15, 301, 4))


def test_sample_disorder_mean():
    delta, n = 0.25, 301
    sigma = delta / np.sqrt(3 * n)
    means = np.array([sample_disorder(1.0, delta, n, s).mean() for s in range(100)])
    assert np.all(np.abs(means - 1.0) < 5 * sigma)
    assert abs(means.mean() - 1.0) < 3 * sigma / np.sqrt(100)


def test_spec_disorder_bonds():
    spec = ChainSpec(301, 1.0, 1.2, 0.8, disorder=Disorder(0.15, 9))
    np.testing.assert_array_equal(spec.t1_bonds(), sample_disorder(1.0, 0.15, 301, 9))
    assert not spec.is_ordered
    assert spec.to_dict()["disorder"]["seed"] == 9


def test_band_structure():
    b = band_dispersion(1.0, 1.0, [np.pi])
    assert abs(b.e_plus[0]) < 1e-7
    assert band_dispersion(1.0, 1.5).band_edges == (-2.5, -0.5, 0.5, 2.5)
    assert band_dispersion(2.0, 1.0, [0.0]).e_plus[0] == 3.0
    with pytest.raises(ValueError):
        band_dispersion(1.0, 1.0, [4.0])


def test_hamiltonian_read_only():
    h = build_ssh_hamiltonian(ChainSpec(4, 1, 1))
    with pytest.raises(ValueError):
        h.entries[0, 1] = 5.0


@settings(max_examples=40, deadline=None)
@given(t1=hop, t2=hop, n=st.integers(3, 30), delta=st.floats(0, 0.9), seed=st.integers(0, 2**31))
def test_chiral_symmetry(t1, t2, n, delta, seed):
    spec = ChainSpec(n, t1, t2, disorder=Disorder(delta, seed))
    w = np.linalg.eigvalsh(build_ssh_hamiltonian(spec).entries)
    np.testing.assert_allclose(w, -w[::-1], atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(t1=hop, t2=hop, n=st.integers(3, 30))
def test_swap_invariance(t1, t2, n):
    w1 = np.linalg.eigvalsh(build_ssh_hamiltonian(ChainSpec(n, t1, t2)).entries)
    w2 = np.linalg.eigvalsh(build_ssh_hamiltonian(ChainSpec(n, t2, t1)).entries)
    np.testing.assert_allclose(w1, w2, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(t1=hop, t2=hop, g=st.floats(0, 3), n=st.integers(3, 30))
def test_mirror_commutes(t1, t2, g, n):
    p = np.eye(2 * n)[mirror_permutation(n)]
    h = build_defect_hamiltonian(ChainSpec(n, t1, t2, g)).entries
    np.testing.assert_array_equal(p @ h @ p.T, h)
    hd = build_dissipative_hamiltonian(ChainSpec(n, t1, t2, g, "dissipative")).entries
    pd = np.eye(2 * n + 1)
    pd[:-1, :-1] = p
    np.testing.assert_array_equal(pd @ hd @ pd.T, hd)


@settings(max_examples=20, deadline=None)
@given(t1=hop, t2=hop, g=st.floats(0.1, 3), n=st.integers(4, 20), m=st.integers(0, 19))
def test_defect_position_immaterial(t1, t2, g, n, m):
    m %= n
    bare = build_ssh_hamiltonian(ChainSpec(n, t1, t2)).entries.copy()
    bare[2 * m, 2 * m] += g
    bare[2 * m + 1, 2 * m + 1] += g
    ref = np.linalg.eigvalsh(build_defect_hamiltonian(ChainSpec(n, t1, t2, g)).entries)
    np.testing.assert_allclose(np.linalg.eigvalsh(bare), ref, atol=1e-10)
