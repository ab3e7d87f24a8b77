"""Single-excitation Hamiltonians of a periodic SSH ring with a probe on cell 0.

Site ordering is interleaved: ``a_n`` sits at index ``2n`` and ``b_n`` at
``2n + 1`` for ``n = 0 ... N-1``. Negative cell indices wrap around the ring,
so ``b_{-1}`` is ``b_{N-1}``. The dissipative model appends the probe
excited level ``q`` as the last basis vector.

Intra-cell bonds ``a_n - b_n`` carry ``t1``; inter-cell bonds ``a_n - b_{n-1}``
carry ``t2``. All on-site energies are measured from the band center.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

MODELS = ("dephasing", "dissipative")


def a_site(n: int, n_cells: int) -> int:
    """Basis index of ``a_n`` with periodic wrapping."""
    return 2 * (n % n_cells)


def b_site(n: int, n_cells: int) -> int:
    """Basis index of ``b_n`` with periodic wrapping."""
    return 2 * (n % n_cells) + 1


def mirror_permutation(n_cells: int) -> np.ndarray:
    """Index map of the reflection ``a_n <-> b_{-n}`` about the defect cell.

    ``psi[mirror_permutation(N)]`` is the reflected state.
    """
    n = np.arange(n_cells)
    perm = np.empty(2 * n_cells, dtype=int)
    perm[2 * n] = 2 * ((-n) % n_cells) + 1
    perm[2 * n + 1] = 2 * ((-n) % n_cells)
    return perm


@dataclass(frozen=True)
class Disorder:
    """Uniform relative disorder ``t1_n = <t1> (1 + u_n)``, ``u_n in (-delta, delta)``."""

    delta: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"disorder strength must satisfy 0 <= delta < 1, got {self.delta}")


@dataclass(frozen=True)
class ChainSpec:
    """Geometry, hoppings and probe coupling of the chain.

    Parameters
    ----------
    n_cells : int
        Number of unit cells ``N`` (at least 2).
    t1 : float or sequence of float
        Intra-cell hopping. A sequence gives one value per bond. With
        ``disorder`` set, a scalar ``t1`` is the mean ``<t1>`` around which the
        bonds are sampled.
    t2 : float
        Inter-cell hopping, always homogeneous.
    gamma : float
        Probe coupling strength.
    model : {"dephasing", "dissipative"}
    disorder : Disorder, optional
    """

    n_cells: int
    t1: Union[float, Sequence[float]]
    t2: float
    gamma: float = 0.0
    model: str = "dephasing"
    boundary: str = "periodic"
    disorder: Optional[Disorder] = None

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValueError(f"n_cells must be an integer >= 2, got {self.n_cells}")
        object.__setattr__(self, "n_cells", int(self.n_cells))
        if np.ndim(self.t1) == 0:
            object.__setattr__(self, "t1", float(self.t1))
            if self.t1 < 0:
                raise ValueError(f"t1 must be non-negative, got {self.t1}")
        else:
            bonds = tuple(float(x) for x in self.t1)
            if len(bonds) != self.n_cells:
                raise ValueError(f"expected {self.n_cells} t1 bonds, got {len(bonds)}")
            if min(bonds) < 0:
                raise ValueError("t1 bonds must be non-negative")
            if self.disorder is not None:
                raise ValueError("give either explicit t1 bonds or a disorder model, not both")
            object.__setattr__(self, "t1", bonds)
        if self.t2 < 0:
            raise ValueError(f"t2 must be non-negative, got {self.t2}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.boundary != "periodic":
            raise ValueError("only periodic boundaries are supported")

    @property
    def mean_t1(self) -> float:
        if isinstance(self.t1, tuple):
            return float(np.mean(self.t1))
        return self.t1

    @property
    def is_ordered(self) -> bool:
        if self.disorder is not None:
            return self.disorder.delta == 0.0
        if isinstance(self.t1, tuple):
            return len(set(self.t1)) == 1
        return True

    def t1_bonds(self) -> np.ndarray:
        """Per-cell intra-dimer hoppings (length ``N``)."""
        if isinstance(self.t1, tuple):
            return np.array(self.t1)
        if self.disorder is not None:
            return sample_disorder(self.t1, self.disorder.delta, self.n_cells, self.disorder.seed)
        return np.full(self.n_cells, self.t1)

    def max_hopping(self) -> float:
        return float(max(self.t1_bonds().max(), self.t2))

    def replace(self, **changes) -> "ChainSpec":
        from dataclasses import replace

        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = {
            "n_cells": self.n_cells,
            "t1": list(self.t1) if isinstance(self.t1, tuple) else self.t1,
            "t2": self.t2,
            "gamma": self.gamma,
            "model": self.model,
            "boundary": self.boundary,
            "disorder": None,
        }
        if self.disorder is not None:
            d["disorder"] = {"delta": self.disorder.delta, "seed": self.disorder.seed,
                             "mean_t1": self.mean_t1}
        return d


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Real symmetric matrix on the single-excitation basis."""

    entries: np.ndarray
    basis: tuple
    spec: Optional[ChainSpec] = None
    kind: str = "ssh"

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(self.basis):
            raise ValueError("entries must be square and match the basis length")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cells(self) -> int:
        return (self.dim - (1 if self.has_probe else 0)) // 2

    @property
    def has_probe(self) -> bool:
        return self.basis[-1] == "q"

    def index(self, label: str) -> int:
        return self.basis.index(label)


def _chain_labels(n_cells: int) -> tuple:
    return tuple(f"{s}{n}" for n in range(n_cells) for s in "ab")


def _ssh_matrix(t1: np.ndarray, t2: float) -> np.ndarray:
    n_cells = len(t1)
    n = np.arange(n_cells)
    a, b = 2 * n, 2 * n + 1
    b_prev = 2 * ((n - 1) % n_cells) + 1
    h = np.zeros((2 * n_cells, 2 * n_cells))
    np.add.at(h, (a, b), t1)
    np.add.at(h, (b, a), t1)
    np.add.at(h, (a, b_prev), t2)
    np.add.at(h, (b_prev, a), t2)
    return h


def build_ssh_hamiltonian(spec: ChainSpec) -> HamiltonianMatrix:
    """Bare periodic SSH ring, ``2N x 2N``."""
    h = _ssh_matrix(spec.t1_bonds(), spec.t2)
    return HamiltonianMatrix(h, _chain_labels(spec.n_cells), spec, kind="ssh")


def build_defect_hamiltonian(spec: ChainSpec) -> HamiltonianMatrix:
    """SSH ring with the probe-induced potential ``gamma`` on ``a_0`` and ``b_0``."""
    if spec.model != "dephasing":
        raise ValueError("the defect Hamiltonian belongs to the dephasing model")
    h = _ssh_matrix(spec.t1_bonds(), spec.t2)
    h[0, 0] += spec.gamma
    h[1, 1] += spec.gamma
    return HamiltonianMatrix(h, _chain_labels(spec.n_cells), spec, kind="defect")


def build_dissipative_hamiltonian(spec: ChainSpec) -> HamiltonianMatrix:
    """Chain plus probe level in the one-excitation sector, ``(2N+1) x (2N+1)``.

    The probe level sits at zero energy (resonant with the band center) and
    exchanges its excitation with ``a_0`` and ``b_0`` at rate ``gamma``.
    """
    if spec.model != "dissipative":
        raise ValueError("the probe-exchange Hamiltonian belongs to the dissipative model")
    dim = 2 * spec.n_cells + 1
    h = np.zeros((dim, dim))
    h[:-1, :-1] = _ssh_matrix(spec.t1_bonds(), spec.t2)
    h[-1, 0] = h[0, -1] = spec.gamma
    h[-1, 1] = h[1, -1] = spec.gamma
    return HamiltonianMatrix(h, _chain_labels(spec.n_cells) + ("q",), spec, kind="dissipative")


def sample_disorder(mean_t1: float, delta: float, n_cells: int, seed: int) -> np.ndarray:
    """Draw ``n_cells`` intra-dimer hoppings ``<t1> (1 + u)``, ``u ~ U(-delta, delta)``."""
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"disorder strength must satisfy 0 <= delta < 1, got {delta}")
    rng = np.random.default_rng(seed)
    return mean_t1 * (1.0 + rng.uniform(-delta, delta, n_cells))


@dataclass(frozen=True)
class BandStructure:
    k: np.ndarray
    e_plus: np.ndarray
    e_minus: np.ndarray
    t1: float
    t2: float
    band_edges: tuple = field(init=False)

    def __post_init__(self):
        gap = abs(self.t1 - self.t2)
        width = self.t1 + self.t2
        object.__setattr__(self, "band_edges", (-width, -gap, gap, width))

    @property
    def gap(self) -> float:
        return abs(self.t1 - self.t2)

    def outside_bands(self, energies, margin: float = 0.0) -> np.ndarray:
        """Mask of energies above/below both bands or inside the gap, by ``margin``."""
        e = np.abs(np.asarray(energies))
        lo, hi = self.band_edges[2], self.band_edges[3]
        return (e > hi + margin) | (e < lo - margin)

    def in_gap(self, energies, margin: float = 0.0) -> np.ndarray:
        return np.abs(np.asarray(energies)) < self.gap - margin


def band_dispersion(t1: float, t2: float, k_samples=None) -> BandStructure:
    """Dispersion ``e_pm(k) = pm sqrt(t1^2 + t2^2 + 2 t1 t2 cos k)``."""
    if k_samples is None:
        k_samples = np.linspace(-np.pi, np.pi, 201)
    k = np.asarray(k_samples, dtype=float)
    if np.any(np.abs(k) > np.pi + 1e-12):
        raise ValueError("k samples must lie in [-pi, pi]")
    e = np.sqrt(np.maximum(t1 * t1 + t2 * t2 + 2 * t1 * t2 * np.cos(k), 0.0))
    return BandStructure(k, e, -e, float(t1), float(t2))


def build_hamiltonian(spec: ChainSpec) -> HamiltonianMatrix:
    """The coupled Hamiltonian matching ``spec.model``."""
    if spec.model == "dissipative":
        return build_dissipative_hamiltonian(spec)
    return build_defect_hamiltonian(spec)
