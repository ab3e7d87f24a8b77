"""Parameter sweeps and disorder ensembles over the probed chain.

Every sweep returns a :class:`SweepResult` whose records are plain Python
scalars, lists and dicts so they serialize losslessly to JSON and CSV.
Points run concurrently on a thread pool (the heavy lifting is LAPACK,
which releases the GIL); records are always reassembled in axis order.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .boundstates import (
    classify_numeric_bound_states,
    dephasing_bound_states,
    dissipative_bound_states,
    in_gap_state,
)
from .dynamics import (
    DEFAULT_DT,
    build_initial_state,
    coherence_dephasing,
    coherence_dissipative,
    eigendecompose,
    parity_index,
)
from .lattice import ChainSpec, Disorder, band_dispersion, build_hamiltonian
from .nonmarkov import compute_n_t, count_peaks, echo_spectrum

DEFAULT_RATIOS = np.linspace(0.5, 1.5, 41)
DEFAULT_T = 150.0
DISSIPATIVE_BURN = 20.0
AXES = ("gamma", "ratio")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    if x is None:
        return ""
    if isinstance(x, (list, tuple)):
        return ";".join(_fmt(v) for v in x)
    return str(x)


def _plain(x):
    """Convert numpy containers and scalars to JSON-native types."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


@dataclass
class SweepResult:
    """Records of a sweep, one per axis point (and group), plus provenance.

    Attributes
    ----------
    kind : str
        ``spectrum``, ``nonmarkov`` or ``disorder``.
    axis : str
        Name of the swept quantity, ``ratio`` (t2/t1) or ``gamma`` (gamma/t1).
    values : list of float
        Axis grid.
    records : list of dict
    provenance : dict
        Template spec, grids, seeds and software version.
    aggregates : list of dict
        Ensemble statistics (disorder sweeps only).
    """

    kind: str
    axis: str
    values: List[float]
    records: List[dict]
    provenance: dict
    aggregates: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return _plain({
            "kind": self.kind,
            "axis": self.axis,
            "values": list(self.values),
            "records": self.records,
            "aggregates": self.aggregates,
            "provenance": self.provenance,
        })

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, text: str) -> "SweepResult":
        d = json.loads(text)
        return cls(d["kind"], d["axis"], d["values"], d["records"], d["provenance"],
                   d.get("aggregates", []))

    def scalar_columns(self, rows: Optional[List[dict]] = None) -> List[str]:
        rows = self.records if rows is None else rows
        cols: List[str] = []
        for r in rows:
            for k, v in r.items():
                if k not in cols and not isinstance(v, dict) and not (
                        isinstance(v, list) and v and isinstance(v[0], dict)):
                    cols.append(k)
        return cols

    def to_csv(self, path=None, aggregates: bool = False) -> str:
        """Flat table; list-valued cells are joined with ``;``.

        Header lines start with ``#`` and carry the provenance (as JSON) and
        the column legend.
        """
        rows = self.aggregates if aggregates else self.records
        cols = self.scalar_columns(rows)
        buf = io.StringIO()
        title = self.kind if self.axis == "none" else f"{self.kind} sweep over {self.axis}"
        buf.write(f"# sshprobe {title}\n")
        buf.write("# provenance: " + json.dumps(_plain(self.provenance), sort_keys=True) + "\n")
        buf.write("# columns: " + ", ".join(f"{c} [{COLUMN_UNITS.get(c, '-')}]" for c in cols) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for r in rows:
            writer.writerow([_fmt(r.get(c)) for c in cols])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    def to_svg(self, path) -> None:
        plot_sweep(self, path)


COLUMN_UNITS = {
    "t1": "energy", "t2": "energy", "gamma": "energy", "ratio": "t2/t1",
    "gamma_ratio": "gamma/t1", "n_t": "1/time", "energy": "energy",
    "in_gap_energy": "energy", "eigenvalues": "energy", "band_edges": "energy",
    "bound_energies": "energy", "T": "time", "t_burn": "time", "dt": "time",
    "n_t_mean": "1/time", "n_t_std": "1/time", "E": "energy", "t": "time",
    "value": "energy", "out_of_band_energies": "energy", "peak_frequencies": "rad/time",
}


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map() yields in submission order regardless of completion order
        return list(pool.map(fn, items))


def _provenance(operation: str, template: ChainSpec, **extra) -> dict:
    p = {"package": "sshprobe", "version": __version__, "operation": operation,
         "template": template.to_dict(), "units": "energies in units of t1, times in 1/t1"}
    p.update(extra)
    return _plain(p)


def analytic_bound_states(spec: ChainSpec):
    """Closed-form bound states for an ordered ``spec`` (empty for ``gamma = 0``)."""
    if not spec.is_ordered or spec.gamma <= 0 or spec.t2 <= 0:
        return []
    t1 = spec.mean_t1
    if spec.model == "dephasing":
        return dephasing_bound_states(t1, spec.t2, spec.gamma)
    return dissipative_bound_states(t1, spec.t2, spec.gamma)


def _bs_dict(bs) -> dict:
    return {"energy": bs.energy, "localization": bs.localization, "parity": bs.parity,
            "parity_index": bs.parity_index, "mode": bs.mode, "origin": bs.origin}


def spectrum_point(spec: ChainSpec, margin: Optional[float] = None) -> dict:
    """Eigenvalues, band edges and bound states (numeric and closed-form) of one spec."""
    h = build_hamiltonian(spec)
    es = eigendecompose(h)
    band = band_dispersion(spec.mean_t1, spec.t2)
    numeric = classify_numeric_bound_states(h, band, margin, es, warn=False)
    analytic = analytic_bound_states(spec)
    t1 = spec.mean_t1
    return {
        "t1": t1, "t2": spec.t2, "gamma": spec.gamma,
        "ratio": spec.t2 / t1, "gamma_ratio": spec.gamma / t1,
        "n_bound": len(numeric),
        "n_analytic": len(analytic),
        "bound_energies": [b.energy for b in numeric],
        "bound_parity": [b.parity for b in numeric],
        "bound_parity_index": [b.parity_index for b in numeric],
        "band_edges": list(band.band_edges),
        "eigenvalues": es.eigenvalues.tolist(),
        "bound_states": [_bs_dict(b) for b in numeric],
        "analytic_bound_states": [_bs_dict(b) for b in analytic],
    }


def _point_spec(template: ChainSpec, axis: str, value: float) -> ChainSpec:
    t1 = template.mean_t1
    if axis == "gamma":
        return template.replace(gamma=value * t1)
    if axis == "ratio":
        return template.replace(t2=value * t1)
    raise ValueError(f"axis must be one of {AXES}, got {axis!r}")


def spectrum_sweep(template: ChainSpec, axis: str, values: Iterable[float],
                   margin: Optional[float] = None, threads: int = 1) -> SweepResult:
    """Spectrum and bound states along ``gamma/t1`` or ``t2/t1``.

    Examples
    --------
    >>> spec = ChainSpec(60, 1.0, 1.5, 0.8)
    >>> res = spectrum_sweep(spec, "gamma", [0.5, 1.0])
    >>> [r["n_analytic"] for r in res.records]
    [2, 2]
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    values = [float(v) for v in values]
    if not values:
        raise ValueError("empty sweep range")
    if min(values) < 0:
        raise ValueError("sweep values must be non-negative")
    specs = [_point_spec(template, axis, v) for v in values]
    records = _map(lambda s: spectrum_point(s, margin), specs, threads)
    for v, r in zip(values, records):
        r["axis_value"] = v
    prov = _provenance("spectrum_sweep", template, axis=axis, values=values, margin=margin)
    return SweepResult("spectrum", axis, values, records, prov)


def n_t_point(spec: ChainSpec, initial: str = "antisym2cell", T: float = DEFAULT_T,
              dt: float = DEFAULT_DT, t_burn: Optional[float] = None,
              psi0=None) -> dict:
    """Non-Markovianity of one parameter point.

    ``t_burn`` defaults to 0 for the dephasing model and to ``20/t1`` for the
    dissipative one, where the initial decay of the probe population is not
    part of the long-time recoherence.
    """
    if t_burn is None:
        t_burn = DISSIPATIVE_BURN / spec.mean_t1 if spec.model == "dissipative" else 0.0
    if spec.model == "dephasing":
        if psi0 is None:
            psi0 = build_initial_state(initial, spec.n_cells)
        trace = coherence_dephasing(spec, psi0, T, dt, initial)
    else:
        initial = "probe_excited"
        trace = coherence_dissipative(spec, T, dt)
    res = compute_n_t(trace, T, t_burn)
    return {"t1": spec.mean_t1, "t2": spec.t2, "gamma": spec.gamma,
            "ratio": spec.t2 / spec.mean_t1, "gamma_ratio": spec.gamma / spec.mean_t1,
            "initial": initial, "T": T, "dt": dt, "t_burn": t_burn,
            "n_t": res.n_t, "n_intervals": res.n_intervals}


def nonmarkov_sweep(template: ChainSpec, ratios: Optional[Iterable[float]] = None,
                    gammas: Optional[Iterable[float]] = None,
                    initial_kinds: Sequence[str] = ("antisym2cell",),
                    T: float = DEFAULT_T, dt: float = DEFAULT_DT,
                    t_burn: Optional[float] = None, threads: int = 1) -> SweepResult:
    """``N_T`` versus ``t2/t1`` for every ``gamma/t1`` in ``gammas`` and every initial state.

    Records are ordered by gamma, then initial state, then ratio. For the
    dissipative model the initial state is always the excited probe and
    ``initial_kinds`` is ignored.
    """
    ratios = [float(r) for r in (DEFAULT_RATIOS if ratios is None else ratios)]
    t1 = template.mean_t1
    gammas = [template.gamma / t1] if gammas is None else [float(g) for g in gammas]
    if not ratios or min(ratios) <= 0:
        raise ValueError("ratios must be positive")
    if template.model == "dissipative":
        initial_kinds = ("probe_excited",)
    jobs = [(g, k, r) for g in gammas for k in initial_kinds for r in ratios]

    def run(job):
        g, kind, r = job
        return n_t_point(template.replace(gamma=g * t1, t2=r * t1), kind, T, dt, t_burn)

    records = _map(run, jobs, threads)
    for (g, k, r), rec in zip(jobs, records):
        rec["axis_value"] = r
    prov = _provenance("nonmarkov_sweep", template, ratios=ratios, gammas=gammas,
                       initial_kinds=list(initial_kinds), T=T, dt=dt, t_burn=t_burn)
    return SweepResult("nonmarkov", "ratio", ratios, records, prov)


def disorder_point(spec: ChainSpec, initial: str = "antisym2cell", T: float = DEFAULT_T,
                   dt: float = DEFAULT_DT, keep_spectrum: bool = False,
                   compute_nt: bool = True) -> dict:
    """Spectrum, parity indices and ``N_T`` of one disorder realization."""
    h = build_hamiltonian(spec)
    es = eigendecompose(h)
    k = in_gap_state(h, es)
    t1 = spec.mean_t1
    top = t1 + spec.t2
    outside = np.flatnonzero(np.abs(es.eigenvalues) > top)
    rec = {
        "delta": spec.disorder.delta if spec.disorder else 0.0,
        "seed": spec.disorder.seed if spec.disorder else None,
        "t1": t1, "t2": spec.t2, "gamma": spec.gamma, "ratio": spec.t2 / t1,
        "in_gap_energy": float(es.eigenvalues[k]),
        "in_gap_parity": parity_index(es.eigenvectors[:, k]),
        "out_of_band_energies": es.eigenvalues[outside].tolist(),
        "out_of_band_parity": [parity_index(es.eigenvectors[:, i]) for i in outside],
    }
    if compute_nt:
        rec["n_t"] = n_t_point(spec, initial, T, dt)["n_t"]
    if keep_spectrum:
        rec["eigenvalues"] = es.eigenvalues.tolist()
    return rec


def disorder_ensemble(template: ChainSpec, deltas: Iterable[float], seeds: Iterable[int],
                      ratios: Optional[Iterable[float]] = None, T: float = DEFAULT_T,
                      dt: float = DEFAULT_DT, initial: str = "antisym2cell",
                      keep_spectrum: bool = False, compute_nt: bool = True,
                      threads: int = 1) -> SweepResult:
    """Realizations of bond disorder on ``t1`` around ``template.t1`` for every (delta, seed, ratio).

    ``template.gamma`` is taken relative to ``<t1>``. Aggregates hold the
    ensemble mean and standard deviation per ``(delta, ratio)``.
    """
    if template.model != "dephasing":
        raise ValueError("disorder ensembles are defined for the dephasing model")
    if not np.isscalar(template.t1):
        raise ValueError("template t1 must be the scalar mean <t1>")
    ratios = [float(r) for r in (DEFAULT_RATIOS if ratios is None else ratios)]
    deltas = [float(d) for d in deltas]
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed")
    t1 = template.mean_t1
    base = template.replace(disorder=None)
    jobs = [(d, s, r) for d in deltas for s in seeds for r in ratios]

    def run(job):
        d, s, r = job
        spec = base.replace(t2=r * t1, disorder=Disorder(d, s))
        return disorder_point(spec, initial, T, dt, keep_spectrum, compute_nt)

    records = _map(run, jobs, threads)
    for (d, s, r), rec in zip(jobs, records):
        rec["axis_value"] = r
    groups: dict = {}
    for (d, s, r), rec in zip(jobs, records):
        groups.setdefault((d, r), []).append(rec)
    aggregates = []
    for d in deltas:
        for r in ratios:
            sel = groups[(d, r)]
            agg = {"delta": d, "ratio": r, "n_seeds": len(sel)}
            keys = ("in_gap_parity", "n_t") if compute_nt else ("in_gap_parity",)
            for key in keys:
                vals = np.array([x[key] for x in sel])
                agg[key + "_mean"] = float(vals.mean())
                agg[key + "_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
            aggregates.append(agg)
    prov = _provenance("disorder_ensemble", template, deltas=deltas, seeds=seeds, ratios=ratios,
                       T=T, dt=dt, initial=initial,
                       rng="numpy.random.default_rng(seed).uniform(-delta, delta, N)")
    return SweepResult("disorder", "ratio", ratios, records, prov, aggregates)


def kink_location(ratios: Sequence[float], n_t: Sequence[float]) -> float:
    """Grid ratio where the discrete second difference of ``N_T`` peaks."""
    r = np.asarray(ratios, dtype=float)
    y = np.asarray(n_t, dtype=float)
    if len(r) < 3:
        raise ValueError("need at least three grid points")
    d2 = y[2:] - 2 * y[1:-1] + y[:-2]
    return float(r[1 + int(np.argmax(d2))])


def echo_peaks(spec: ChainSpec, t_max: float = 400.0, dt: float = DEFAULT_DT,
               t_burn: float = DISSIPATIVE_BURN, window: str = "blackmanharris",
               rel_threshold: float = 1e-3, two_sided: bool = True) -> dict:
    """Spectral line count of the probe echo of a dissipative chain."""
    if spec.model != "dissipative":
        raise ValueError("echo peaks are defined for the dissipative model")
    trace = coherence_dissipative(spec, t_max, dt)
    sp = echo_spectrum(trace, window, t_burn, rel_threshold)
    return {"count": count_peaks(sp, rel_threshold, two_sided),
            "frequencies": sp.peak_frequencies().tolist(),
            "t_max": t_max, "dt": dt, "t_burn": t_burn, "window": sp.window,
            "rel_threshold": rel_threshold, "two_sided": two_sided}


def plot_sweep(result: SweepResult, path) -> None:
    """Minimal line/scatter SVG of a sweep (needs matplotlib)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "sshprobe"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    xlabel = "t2/t1" if result.axis == "ratio" else "gamma/t1"
    if result.kind == "spectrum":
        for r in result.records:
            ev = r["eigenvalues"]
            ax.plot([r["axis_value"]] * len(ev), ev, ",", color="0.6")
            be = r["bound_energies"]
            ax.plot([r["axis_value"]] * len(be), be, ".", color="C3", ms=3)
        ax.set_ylabel("E / t1")
    elif result.kind == "nonmarkov":
        groups = {}
        for r in result.records:
            groups.setdefault((r["gamma_ratio"], r["initial"]), []).append(r)
        for (g, kind), rows in groups.items():
            ax.plot([x["axis_value"] for x in rows], [x["n_t"] for x in rows],
                    marker=".", label=f"gamma={g:g}, {kind}")
        ax.set_ylabel("N_T")
        ax.legend(fontsize=7)
    else:
        groups = {}
        for a in result.aggregates:
            groups.setdefault(a["delta"], []).append(a)
        key = "n_t" if result.aggregates and "n_t_mean" in result.aggregates[0] else "in_gap_parity"
        for d, rows in groups.items():
            x = [a["ratio"] for a in rows]
            y = np.array([a[key + "_mean"] for a in rows])
            s = np.array([a[key + "_std"] for a in rows])
            ax.plot(x, y, marker=".", label=f"delta={d:g}")
            ax.fill_between(x, y - s, y + s, alpha=0.2)
        ax.set_ylabel(key + " (ensemble)")
        ax.legend(fontsize=7)
    ax.set_xlabel(xlabel)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
