"""Exact single-excitation time evolution by spectral propagation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .lattice import (
    ChainSpec,
    HamiltonianMatrix,
    a_site,
    b_site,
    build_defect_hamiltonian,
    build_dissipative_hamiltonian,
    build_ssh_hamiltonian,
    mirror_permutation,
)

DEFAULT_DT = 0.02
DEFAULT_TMAX = 150.0

# time samples per chunk when forming exp(-iEt); bounds memory at large N
_CHUNK = 1024


class FiniteRingWarning(RuntimeWarning):
    """Evolution window long enough for excitations to circle the ring."""


@dataclass(frozen=True)
class Eigensystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T

    def project(self, psi) -> np.ndarray:
        """Expansion coefficients of ``psi`` in the eigenbasis."""
        return self.eigenvectors.T @ np.asarray(psi)

    def propagate(self, psi, times) -> np.ndarray:
        """``exp(-iHt) psi`` for every ``t``; returns shape ``(dim, len(times))``."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        coeffs = self.project(psi)
        out = np.empty((len(coeffs), len(times)), dtype=complex)
        for lo in range(0, len(times), _CHUNK):
            t = times[lo:lo + _CHUNK]
            phases = np.exp(-1j * np.outer(self.eigenvalues, t)) * coeffs[:, None]
            out[:, lo:lo + _CHUNK] = self.eigenvectors @ phases
        return out


def eigendecompose(h: Union[HamiltonianMatrix, np.ndarray]) -> Eigensystem:
    """Full real spectral decomposition of a symmetric matrix."""
    m = h.entries if isinstance(h, HamiltonianMatrix) else np.asarray(h, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(np.abs(m).max(), 1.0)
    if np.abs(m - m.T).max() > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    w, v = np.linalg.eigh(m)
    w.setflags(write=False)
    v.setflags(write=False)
    return Eigensystem(w, v)


INITIAL_KINDS = ("antisym2cell", "sym1cell", "asym3site", "custom")
_ALIASES = {"antisym": "antisym2cell", "sym": "sym1cell", "asym3": "asym3site"}


def build_initial_state(kind: str, n_cells: int, amplitudes: Optional[Sequence[float]] = None) -> np.ndarray:
    """Unit-norm chain state in the one-excitation sector.

    ``antisym2cell`` is ``(a_0 - b_0 + a_1 - b_{-1})/2``, ``asym3site`` is
    ``(a_0 - b_0 + a_1)/sqrt(3)`` and ``sym1cell`` is ``(a_0 + b_0)/sqrt(2)``.
    ``custom`` normalizes the given ``amplitudes`` (length ``2N``).
    """
    kind = _ALIASES.get(kind, kind)
    psi = np.zeros(2 * n_cells)
    a = lambda n: a_site(n, n_cells)  # noqa: E731
    b = lambda n: b_site(n, n_cells)  # noqa: E731
    if kind == "antisym2cell":
        if n_cells < 3:
            raise ValueError("antisym2cell needs at least 3 cells")
        psi[[a(0), b(0), a(1), b(-1)]] = [0.5, -0.5, 0.5, -0.5]
        return psi
    if kind == "sym1cell":
        psi[[a(0), b(0)]] = 1.0
    elif kind == "asym3site":
        if n_cells < 2:
            raise ValueError("asym3site needs at least 2 cells")
        psi[[a(0), b(0), a(1)]] = [1.0, -1.0, 1.0]
    elif kind == "custom":
        if amplitudes is None:
            raise ValueError("custom initial state needs amplitudes")
        psi = np.asarray(amplitudes, dtype=complex)
        if psi.shape != (2 * n_cells,):
            raise ValueError(f"custom state must have {2 * n_cells} amplitudes, got {psi.shape}")
        if not np.iscomplexobj(amplitudes) or np.all(psi.imag == 0):
            psi = psi.real
    else:
        raise ValueError(f"unknown initial state kind {kind!r}")
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise ValueError("initial state is not normalizable")
    return psi / norm


def parity_index(amplitudes) -> float:
    """Overlap with the mirror-symmetric sector, 1 for ``a_n = b_{-n}``, 0 for ``a_n = -b_{-n}``.

    An odd-length vector is taken to carry the probe amplitude last; the
    probe entry is ignored.
    """
    psi = np.asarray(amplitudes)
    if psi.ndim != 1:
        raise ValueError("expected a 1-d amplitude vector")
    if len(psi) % 2:
        psi = psi[:-1]
    norm = np.sum(np.abs(psi) ** 2)
    if norm == 0:
        raise ValueError("parity index undefined for the zero state")
    n_cells = len(psi) // 2
    a = psi[0::2]
    b_reflected = psi[1::2][(-np.arange(n_cells)) % n_cells]
    return float(0.5 * np.sum(np.abs(a + b_reflected) ** 2) / norm)


def mirror_expectation(amplitudes) -> float:
    """``<psi|M|psi> / <psi|psi>`` for the reflection ``a_n <-> b_{-n}``; equals ``2P - 1``."""
    psi = np.asarray(amplitudes)
    if len(psi) % 2:
        psi = psi[:-1]
    perm = mirror_permutation(len(psi) // 2)
    return float(np.real(np.vdot(psi, psi[perm])) / np.vdot(psi, psi).real)


@dataclass(frozen=True)
class CoherenceTrace:
    """Sampled probe coherence ``q(t)`` on a uniform grid (times in units of 1/t1)."""

    times: np.ndarray
    q: np.ndarray
    model: str = "synthetic"
    spec: Optional[dict] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        q = np.asarray(self.q, dtype=complex)
        if t.ndim != 1 or t.shape != q.shape:
            raise ValueError("times and q must be 1-d arrays of equal length")
        if len(t) < 2:
            raise ValueError("a trace needs at least two samples")
        steps = np.diff(t)
        if np.any(steps <= 0):
            raise ValueError("time grid must be strictly increasing")
        if np.ptp(steps) > 1e-9 * max(1.0, abs(t[-1])):
            raise ValueError("time grid must be uniform")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "q", q)

    @property
    def L(self) -> np.ndarray:
        return np.abs(self.q) ** 2

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def t_max(self) -> float:
        return float(self.times[-1])


def time_grid(t_max: float, dt: float) -> np.ndarray:
    if dt <= 0 or t_max <= 0:
        raise ValueError("t_max and dt must be positive")
    n = int(round(t_max / dt))
    return dt * np.arange(n + 1)


def revival_time(spec: ChainSpec) -> float:
    """Time for the fastest wavefront to circle the ring back to cell 0.

    The largest SSH group velocity is ``min(t1, t2)`` cells per unit time.
    """
    v_max = min(float(spec.t1_bonds().max()), spec.t2)
    if v_max <= 0:
        return float("inf")
    return spec.n_cells / v_max


def _check_revival(spec: ChainSpec, t_max: float):
    t_rev = revival_time(spec)
    if t_max > t_rev:
        warnings.warn(
            f"t_max={t_max:g} exceeds the ring revival time {t_rev:g}; "
            "finite-size recurrences contaminate the trace",
            FiniteRingWarning,
            stacklevel=3,
        )


def coherence_dephasing(spec: ChainSpec, psi0, t_max: float = DEFAULT_TMAX, dt: float = DEFAULT_DT,
                        initial: str = "custom") -> CoherenceTrace:
    """Loschmidt amplitude ``q(t) = <psi0| exp(iH_ssh t) exp(-iH_defect t) |psi0>``."""
    if spec.model != "dephasing":
        raise ValueError("coherence_dephasing needs a dephasing ChainSpec")
    psi0 = np.asarray(psi0)
    if psi0.shape != (2 * spec.n_cells,):
        raise ValueError("initial state does not match the chain size")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")
    _check_revival(spec, t_max)
    times = time_grid(t_max, dt)
    bare = eigendecompose(build_ssh_hamiltonian(spec))
    defect = eigendecompose(build_defect_hamiltonian(spec))
    q = np.empty(len(times), dtype=complex)
    for lo in range(0, len(times), _CHUNK):
        t = times[lo:lo + _CHUNK]
        chi = bare.propagate(psi0, t)
        phi = defect.propagate(psi0, t)
        q[lo:lo + _CHUNK] = np.einsum("it,it->t", chi.conj(), phi)
    meta = {"t_max": t_max, "dt": dt, "initial": initial}
    return CoherenceTrace(times, q, "dephasing", spec.to_dict(), meta)


def coherence_dissipative(spec: ChainSpec, t_max: float = DEFAULT_TMAX, dt: float = DEFAULT_DT) -> CoherenceTrace:
    """Excited-state amplitude of the probe, starting from ``|e> x |vacuum>``."""
    if spec.model != "dissipative":
        raise ValueError("coherence_dissipative needs a dissipative ChainSpec")
    _check_revival(spec, t_max)
    times = time_grid(t_max, dt)
    es = eigendecompose(build_dissipative_hamiltonian(spec))
    weights = es.eigenvectors[-1, :] ** 2
    q = np.empty(len(times), dtype=complex)
    for lo in range(0, len(times), _CHUNK):
        t = times[lo:lo + _CHUNK]
        q[lo:lo + _CHUNK] = np.exp(-1j * np.outer(t, es.eigenvalues)) @ weights
    meta = {"t_max": t_max, "dt": dt, "initial": "probe_excited"}
    return CoherenceTrace(times, q, "dissipative", spec.to_dict(), meta)


@dataclass(frozen=True)
class ProbeDensityMatrix:
    """Probe state over the ordered basis ``(e, g)``."""

    matrix: np.ndarray
    t: float

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def is_physical(self, tol: float = 1e-12) -> bool:
        m = self.matrix
        herm = np.allclose(m, m.conj().T, atol=tol)
        return herm and abs(self.trace - 1) < tol and np.linalg.eigvalsh(m).min() > -tol


def _as_density(probe_state) -> np.ndarray:
    s = np.asarray(probe_state, dtype=complex)
    if s.shape == (2,):
        if abs(np.vdot(s, s).real - 1) > 1e-10:
            raise ValueError("probe amplitudes (C_e, C_g) must be normalized")
        return np.outer(s, s.conj())
    if s.shape == (2, 2):
        return s
    raise ValueError("probe state must be (C_e, C_g) or a 2x2 density matrix")


def probe_density_matrix(trace: CoherenceTrace, probe_state, t: float) -> ProbeDensityMatrix:
    """Reduced probe state at grid time ``t`` given its initial state."""
    idx = int(round((t - trace.times[0]) / trace.dt))
    if idx < 0 or idx >= len(trace.times) or abs(trace.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"t={t} is not on the trace grid")
    q = trace.q[idx]
    rho0 = _as_density(probe_state)
    ree, reg, rge, rgg = rho0[0, 0], rho0[0, 1], rho0[1, 0], rho0[1, 1]
    if trace.model == "dissipative":
        p = abs(q) ** 2
        m = np.array([[p * ree, q * reg], [np.conj(q) * rge, (1 - p) * ree + rgg]])
    else:
        m = np.array([[ree, q * reg], [np.conj(q) * rge, rgg]])
    return ProbeDensityMatrix(m, float(trace.times[idx]))
