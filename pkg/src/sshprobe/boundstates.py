"""Bound states localized around the probe cell.

Dephasing coupling: four closed-form candidates per parameter point, two
mirror-symmetric and two antisymmetric, kept when they decay (``|X| > 1``).
Dissipative coupling: a chiral zero mode plus the real roots of a cubic in the
localization parameter.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .dynamics import Eigensystem, eigendecompose, mirror_expectation, parity_index
from .lattice import BandStructure, HamiltonianMatrix, band_dispersion

LOCALIZATION_TOL = 1e-9
WEAK_LOCALIZATION = 1.05
DETECTION_MARGIN = 1e-4


class FiniteSizeWarning(RuntimeWarning):
    """A detected bound state still has sizeable weight far from the probe."""


@dataclass(frozen=True)
class BoundState:
    """Localized eigenstate; ``localization`` is X, ``imbalance`` is Y.

    Amplitudes follow the ansatz: for the dephasing model ``c0``; for the
    dissipative model ``q0`` (probe), ``c1`` and ``c2`` (chain).
    """

    energy: float
    localization: float
    imbalance: Optional[float]
    parity: str
    amplitudes: dict = field(default_factory=dict)
    origin: str = "analytic"
    parity_index: float = float("nan")
    model: str = "dephasing"
    mode: str = ""

    @property
    def weakly_localized(self) -> bool:
        return abs(self.localization) < WEAK_LOCALIZATION

    def localization_length(self) -> float:
        """Decay length in cells, ``1/ln|X|``."""
        return 1.0 / math.log(abs(self.localization))


def _root_pair(base: float, disc: float, product: float, scale: float):
    """Roots ``(base +- disc)/scale`` computed without cancellation given their product."""
    big = (base + math.copysign(disc, base if base != 0 else 1.0)) / scale
    small = product / big if big != 0 else 0.0
    return (big, small) if base >= 0 else (small, big)


def dephasing_bound_states(t1: float, t2: float, gamma: float) -> List[BoundState]:
    """Closed-form bound states of the chain with an on-site defect ``gamma`` on cell 0.

    For each mirror sector ``s = +1`` (symmetric) and ``s = -1``
    (antisymmetric) the two candidates are

        X^pm = (g(g + 2 s t1) pm sqrt(g^2 (g + 2 s t1)^2 + 4 t2^2 (g + s t1)^2)) / (2 t1 t2)
        Y    = (g + s t1) / (t1 X)
        E    = (g + s t1) (1 + t2 / (t1 X))

    where the last line is the closed-form energy rearranged so that the
    ``gamma = t1`` pole of the antisymmetric branch cancels.
    """
    if t1 <= 0 or t2 <= 0 or gamma <= 0:
        raise ValueError("dephasing bound states need t1, t2, gamma > 0")
    states = []
    for sign, parity in ((1, "symmetric"), (-1, "antisymmetric")):
        g_eff = gamma + sign * t1
        base = gamma * (gamma + 2 * sign * t1)
        disc = math.sqrt(base * base + 4 * t2 * t2 * g_eff * g_eff)
        a_term = g_eff * g_eff + t1 * t1
        x_plus, x_minus = _root_pair(base, disc, -(g_eff / t1) ** 2, 2 * t1 * t2)
        for branch, x in (("+", x_plus), ("-", x_minus)):
            if abs(x) <= 1 + LOCALIZATION_TOL:
                continue
            if branch == "+":
                # (A + sqrt B) / (2 g_eff); g_eff != 0 here since X^+ -> 0 as g_eff -> 0
                energy = (a_term + disc) / (2 * g_eff)
            else:
                energy = 2 * g_eff * (t1 * t1 - t2 * t2) / (a_term + disc)
            y = g_eff / (t1 * x)
            c0 = math.sqrt((1 - x ** -2) / (2 * (1 + y * y)))
            states.append(BoundState(
                energy=energy, localization=x, imbalance=y, parity=parity,
                amplitudes={"c0": c0}, origin="analytic",
                parity_index=1.0 if sign > 0 else 0.0, model="dephasing",
                mode=("E+" if sign > 0 else "E-") + branch,
            ))
    return sorted(states, key=lambda s: s.energy)


def dephasing_bs_wavefunction(bs: BoundState, n_cells: int) -> np.ndarray:
    """Ansatz amplitudes of a dephasing bound state on a ring of ``n_cells`` cells.

    ``c_{2n} = c0 X^-n`` sits on ``a_{-n}`` and (with the parity sign) on
    ``b_n``; ``c_{2n+1} = Y c_{2n}`` sits on ``b_{-n-1}`` and ``a_{n+1}``. The
    tails are truncated where they would meet on the far side of the ring.
    """
    x, y = bs.localization, bs.imbalance
    if abs(x) <= 1:
        raise ValueError("wavefunction needs a localized state (|X| > 1)")
    sgn = 1.0 if bs.parity == "symmetric" else -1.0
    c0 = bs.amplitudes.get("c0", math.sqrt((1 - x ** -2) / (2 * (1 + y * y))))
    psi = np.zeros(2 * n_cells)
    n = np.arange(n_cells // 2)
    even = c0 * float(x) ** (-n.astype(float))
    odd = even * y
    psi[2 * ((-n) % n_cells)] = even
    psi[2 * n + 1] = sgn * even
    psi[2 * ((-n - 1) % n_cells) + 1] = odd
    psi[2 * ((n + 1) % n_cells)] = sgn * odd
    return psi


def _real_roots(coeffs, tol=1e-9):
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) <= tol * np.maximum(1.0, np.abs(roots))].real
    poly, dpoly = np.poly1d(coeffs), np.poly1d(coeffs).deriv()
    polished = []
    for r in real:
        for _ in range(3):
            d = dpoly(r)
            if d == 0:
                break
            r = r - poly(r) / d
        polished.append(float(r))
    return sorted(polished)


def dissipative_cubic(t1: float, t2: float, gamma: float):
    """Coefficients ``(1, s1, s2, s3)`` of the cubic for the localization parameter."""
    g2 = gamma * gamma
    s1 = t1 / t2 - 4 * g2 / (t1 * t2)
    s2 = -1 - 4 * g2 / t2 ** 2 + 4 * g2 * g2 / (t1 ** 2 * t2 ** 2)
    s3 = -t1 / t2
    return (1.0, s1, s2, s3)


def _dissipative_amplitudes(t1, t2, gamma, x, energy):
    """Normalized ``(q0, c1, c2)`` for an even bound state of the probe-exchange model."""
    if energy == 0.0:
        q_over_c1 = t1 / gamma
        c1 = 1.0 / math.sqrt(q_over_c1 ** 2 + 2 / (x * x - 1))
        return q_over_c1 * c1, c1, 0.0
    # c1/c2 from E c1 = (t1 + t2 X) c2 or, equivalently, E c2 = (t1 + t2/X) c1
    u, v = t1 + t2 * x, t1 + t2 / x
    ratio = u / energy if abs(u) >= abs(v) else energy / v
    q_over_c2 = 2 * gamma / energy
    x2 = x * x
    norm2 = q_over_c2 ** 2 + 2 * x2 / (x2 - 1) + 2 * ratio ** 2 / (x2 - 1)
    c2 = 1.0 / math.sqrt(norm2)
    return q_over_c2 * c2, ratio * c2, c2


def dissipative_bound_states(t1: float, t2: float, gamma: float) -> List[BoundState]:
    """Even bound states of the probe coupled by excitation exchange to ``a_0 + b_0``.

    Returns the zero mode (``X = -t2/t1``, only for ``t2 > t1``) and one state
    per real root ``|X| > 1`` of the cubic, with ``E = t1 + t2 X - 2 gamma^2/t1``.
    """
    if t1 <= 0 or t2 <= 0 or gamma <= 0:
        raise ValueError("dissipative bound states need t1, t2, gamma > 0")
    states = []
    region = existence_thresholds(t1, t2)
    x0 = -t2 / t1
    if abs(x0) > 1 + LOCALIZATION_TOL:
        q0, c1, c2 = _dissipative_amplitudes(t1, t2, gamma, x0, 0.0)
        states.append(BoundState(0.0, x0, None, "symmetric", {"q0": q0, "c1": c1, "c2": c2},
                                 "analytic", 1.0, "dissipative", "Ia"))
    for x in _real_roots(dissipative_cubic(t1, t2, gamma)):
        if abs(x) <= 1 + LOCALIZATION_TOL:
            continue
        energy = t1 + t2 * x - 2 * gamma * gamma / t1
        if abs(energy) < 1e-12:
            continue
        q0, c1, c2 = _dissipative_amplitudes(t1, t2, gamma, x, energy)
        states.append(BoundState(energy, x, None, "symmetric", {"q0": q0, "c1": c1, "c2": c2},
                                 "analytic", 1.0, "dissipative", region.mode_label(energy, x)))
    return sorted(states, key=lambda s: s.energy)


def dissipative_bs_wavefunction(bs: BoundState, n_cells: int) -> np.ndarray:
    """Ansatz amplitudes ``(chain..., probe)`` of a dissipative bound state.

    ``alpha_n = c1 X^-n`` (n >= 1), ``beta_n = c2 X^-n`` (n >= 0) and the even
    partners ``alpha_{-n} = beta_n``, ``beta_{-n} = alpha_n``.
    """
    x = bs.localization
    q0, c1, c2 = (bs.amplitudes[k] for k in ("q0", "c1", "c2"))
    psi = np.zeros(2 * n_cells + 1)
    half = n_cells // 2
    m = np.arange(half).astype(float)
    decay = x ** (-m)
    idx = np.arange(half)
    psi[2 * idx + 1] = c2 * decay
    psi[2 * ((-idx) % n_cells)] = c2 * decay
    n = np.arange(1, half)
    psi[2 * n] = c1 * x ** (-n.astype(float))
    psi[2 * ((-n) % n_cells) + 1] = c1 * x ** (-n.astype(float))
    psi[-1] = q0
    return psi


@dataclass(frozen=True)
class ExistenceRegion:
    """Coupling thresholds for the dissipative bound states.

    ``gamma1 = sqrt(t1 (t1 + t2))`` always; ``gamma2 = sqrt(t1 (t1 - t2))``
    only when ``t1 >= t2``.
    """

    t1: float
    t2: float
    gamma1: float
    gamma2: Optional[float]

    @property
    def topological(self) -> bool:
        return self.t2 > self.t1

    def modes(self, gamma: float) -> List[str]:
        """Labels of the bound states present at coupling ``gamma``."""
        if self.topological:
            out = ["Ia", "IIa"]
            if gamma > self.gamma1:
                out.append("IIIa")
            return out
        out = ["IIb"]
        if self.gamma2 is not None and gamma < self.gamma2:
            out.insert(0, "Ib")
        if gamma > self.gamma1:
            out.append("IIIb")
        return out

    def expected_count(self, gamma: float) -> int:
        return len(self.modes(gamma))

    def mode_label(self, energy: float, x: float) -> str:
        suffix = "a" if self.topological else "b"
        if energy > self.t1 + self.t2:
            return "II" + suffix
        if energy < -(self.t1 + self.t2):
            return "III" + suffix
        return "I" + suffix


def existence_thresholds(t1: float, t2: float) -> ExistenceRegion:
    if t1 <= 0 or t2 <= 0:
        raise ValueError("thresholds need t1, t2 > 0")
    g1 = math.sqrt(t1 * (t1 + t2))
    g2 = math.sqrt(t1 * (t1 - t2)) if t1 >= t2 else None
    return ExistenceRegion(t1, t2, g1, g2)


def estimate_localization(psi, n_cells: int, n_fit: Optional[int] = None) -> float:
    """Fit ``|X|`` from the geometric decay of cell weights to the right of cell 0.

    The sign is read from successive amplitudes on the dominant sublattice.
    """
    chain = np.asarray(psi)[: 2 * n_cells]
    a, b = chain[0::2], chain[1::2]
    w = np.abs(a) ** 2 + np.abs(b) ** 2
    limit = n_fit or max(3, n_cells // 4)
    cells = np.arange(1, limit)
    cells = cells[w[cells] > 1e-24 * w.max()]
    if len(cells) < 2:
        return float("inf")
    slope = np.polyfit(cells, np.log(w[cells]), 1)[0]
    mag = math.exp(-slope / 2)
    sub = a if np.sum(np.abs(a[cells]) ** 2) >= np.sum(np.abs(b[cells]) ** 2) else b
    ratios = np.real(sub[cells[:-1]] * np.conj(sub[cells[1:]]))
    sign = 1.0 if np.sum(np.sign(ratios)) >= 0 else -1.0
    return sign * mag


def classify_numeric_bound_states(h: HamiltonianMatrix, band: Optional[BandStructure] = None,
                                  margin: Optional[float] = None,
                                  eigensystem: Optional[Eigensystem] = None,
                                  warn: bool = True) -> List[BoundState]:
    """Eigenstates of ``h`` lying outside the bulk bands or inside the gap.

    ``margin`` defaults to ``1e-4 (t1 + t2)``. Ordered chains receive an exact
    parity label from the sign of the mirror expectation; disordered chains
    are labelled ``none`` and carry only the parity index.
    """
    spec = h.spec
    if band is None:
        if spec is None:
            raise ValueError("need a band structure or a Hamiltonian with a ChainSpec")
        band = band_dispersion(spec.mean_t1, spec.t2)
    if margin is None:
        margin = DETECTION_MARGIN * (band.t1 + band.t2)
    es = eigensystem or eigendecompose(h)
    mask = band.outside_bands(es.eigenvalues, margin)
    ordered = spec is None or spec.is_ordered
    n_cells = h.n_cells
    far = np.minimum(np.arange(n_cells), n_cells - np.arange(n_cells)) > n_cells / 4
    far_sites = np.repeat(far, 2)
    states = []
    for k in np.flatnonzero(mask):
        psi = es.eigenvectors[:, k]
        chain = psi[: 2 * n_cells]
        tail = float(np.sum(chain[far_sites] ** 2))
        if warn and tail > 1e-6:
            warnings.warn(f"bound state at E={es.eigenvalues[k]:.6g} keeps tail weight {tail:.2e} "
                          f"beyond N/4 cells", FiniteSizeWarning, stacklevel=2)
        p_idx = parity_index(psi)
        if ordered:
            parity = "symmetric" if mirror_expectation(psi) > 0 else "antisymmetric"
        else:
            parity = "none"
        amps = {"probe": float(psi[-1])} if h.has_probe else {}
        states.append(BoundState(
            energy=float(es.eigenvalues[k]),
            localization=estimate_localization(psi, n_cells),
            imbalance=None, parity=parity, amplitudes=amps, origin="numeric",
            parity_index=p_idx, model="dissipative" if h.has_probe else "dephasing",
        ))
    return states


def in_gap_state(h: HamiltonianMatrix, eigensystem: Optional[Eigensystem] = None,
                 window: Optional[float] = None, radius: int = 3) -> int:
    """Index of the in-gap eigenstate bound to the probe, robust to hopping disorder.

    Among eigenstates with ``|E| < max(gap, window)`` (``window`` defaults to
    ``0.1 <t1>``), pick the one with the largest weight within ``radius``
    cells of the defect. Disorder-induced gap states spread their weight
    along the ring and lose this comparison.
    """
    spec = h.spec
    es = eigensystem or eigendecompose(h)
    t1 = spec.mean_t1
    if window is None:
        window = 0.1 * t1
    half_width = max(abs(t1 - spec.t2), window)
    candidates = np.flatnonzero(np.abs(es.eigenvalues) < half_width)
    if len(candidates) == 0:
        raise ValueError("no eigenstate inside the gap window")
    n_cells = h.n_cells
    cells = np.arange(2 * n_cells) // 2
    near = np.minimum(cells, n_cells - cells) <= radius
    local = np.sum(es.eigenvectors[: 2 * n_cells][near][:, candidates] ** 2, axis=0)
    return int(candidates[np.argmax(local)])
