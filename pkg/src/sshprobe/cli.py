"""Command-line front end: ``ssh-probe <subcommand> [flags]``.

Flags may also come from a JSON file given with ``--config`` whose keys are
the flag names (``ratio-min`` or ``ratio_min``). Explicit flags win over the
config file, which wins over built-in defaults.

Exit status is 0 on success, 1 for invalid input and 2 for failures during
the computation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import shlex
import sys
from typing import List, Optional

import numpy as np

from . import __version__
from .boundstates import (
    classify_numeric_bound_states,
    dephasing_bound_states,
    dissipative_bound_states,
    existence_thresholds,
)
from .dynamics import build_initial_state, coherence_dephasing, coherence_dissipative, parity_index
from .experiments import (
    SweepResult,
    disorder_ensemble,
    echo_peaks,
    n_t_point,
    nonmarkov_sweep,
    spectrum_sweep,
)
from .lattice import ChainSpec, band_dispersion, build_hamiltonian

SEED_ENV = "SSH_PROBE_SEED"

DEFAULTS = {
    "model": "dephasing", "t1": 1.0, "t2": 1.5, "gamma": 0.8, "cells": 200,
    "tmax": 150.0, "dt": 0.02, "T": 150.0, "tburn": None, "initial": "antisym",
    "delta": "0.15", "seed": None, "realizations": 20,
    "ratio_min": 0.5, "ratio_max": 1.5, "ratio_steps": 41,
    "gammas": None, "axis": None, "axis_min": 0.0, "axis_max": 3.0, "axis_steps": 61,
    "output": None, "format": "csv", "plot": False, "threads": 1,
    "numeric": False, "peaks": False, "peak_tmax": 400.0,
}


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _add_chain(p):
    g = p.add_argument_group("chain")
    g.add_argument("--model", choices=("dephasing", "dissipative"),
                   help="probe coupling (default dephasing)")
    g.add_argument("--t1", type=float, help="intra-cell hopping, energy units (default 1)")
    g.add_argument("--t2", type=float, help="inter-cell hopping, energy units (default 1.5)")
    g.add_argument("--gamma", type=float, help="probe coupling, energy units (default 0.8)")
    g.add_argument("--cells", type=int, help="number of unit cells N, dimensionless (default 200)")


def _add_time(p, with_tmax=True):
    g = p.add_argument_group("time grid")
    if with_tmax:
        g.add_argument("--tmax", type=float, help="evolution time, units of 1/t1 (default 150)")
    g.add_argument("--dt", type=float, help="time step, units of 1/t1 (default 0.02)")


def _add_nm(p):
    g = p.add_argument_group("non-Markovianity")
    g.add_argument("--T", type=float, help="integration horizon, units of 1/t1 (default 150)")
    g.add_argument("--tburn", type=float,
                   help="start of the integration window, units of 1/t1 "
                        "(default 0 dephasing, 20 dissipative)")
    _add_initial(g)


def _add_initial(g):
    g.add_argument("--initial",
                   help="initial chain state: antisym, sym, asym3 or file:<path> with 2N "
                        "amplitudes, dimensionless (default antisym); comma-separated list for sweep")


def _add_ratio(p):
    g = p.add_argument_group("ratio grid")
    g.add_argument("--ratio-min", type=float, help="smallest t2/t1, dimensionless (default 0.5)")
    g.add_argument("--ratio-max", type=float, help="largest t2/t1, dimensionless (default 1.5)")
    g.add_argument("--ratio-steps", type=int, help="number of grid points, dimensionless (default 41)")


def _add_disorder(p):
    g = p.add_argument_group("disorder")
    g.add_argument("--delta",
                   help="relative t1 disorder strength(s), dimensionless, comma-separated (default 0.15)")
    g.add_argument("--seed", type=int,
                   help=f"first RNG seed, dimensionless (default ${SEED_ENV} or 0)")
    g.add_argument("--realizations", type=int,
                   help="number of seeds seed, seed+1, ..., dimensionless (default 20)")


def _add_output(p):
    g = p.add_argument_group("output")
    g.add_argument("--output", help="output file path (default stdout)")
    g.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    g.add_argument("--plot", action="store_true",
                   help="also write an SVG next to --output")
    g.add_argument("--threads", type=int, help="worker threads for sweeps, dimensionless (default 1)")
    g.add_argument("--config", help="JSON file with default values for any flag")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ssh-probe",
                     description="Bound states and probe dynamics of an SSH ring. Energies are in "
                                 "the units of the hoppings (t1 = 1 by default), times in 1/t1.",
                     argument_default=argparse.SUPPRESS)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)
    kw = {"argument_default": argparse.SUPPRESS}

    p = sub.add_parser("spectrum", help="eigenvalues of one chain, or a sweep along --axis", **kw)
    _add_chain(p)
    g = p.add_argument_group("sweep")
    g.add_argument("--axis", choices=("gamma", "ratio"),
                   help="sweep gamma/t1 or t2/t1 instead of a single point")
    g.add_argument("--axis-min", type=float, help="sweep start, in units of t1 (default 0)")
    g.add_argument("--axis-max", type=float, help="sweep end, in units of t1 (default 3)")
    g.add_argument("--axis-steps", type=int, help="number of sweep points, dimensionless (default 61)")
    _add_output(p)

    p = sub.add_parser("bound-states", help="closed-form bound states (E, X, Y, parity)", **kw)
    _add_chain(p)
    p.add_argument("--numeric", action="store_true",
                   help="also diagonalize the N-cell ring and list detected bound states")
    _add_output(p)

    p = sub.add_parser("evolve", help="probe coherence q(t) and echo L(t) = |q|^2", **kw)
    _add_chain(p)
    _add_time(p)
    g = p.add_argument_group("state")
    _add_initial(g)
    _add_output(p)

    p = sub.add_parser("nonmark", help="time-averaged recoherence N_T of one chain", **kw)
    _add_chain(p)
    _add_time(p, with_tmax=False)
    _add_nm(p)
    p.add_argument("--peaks", action="store_true",
                   help="also count spectral lines of the echo (dissipative model)")
    p.add_argument("--peak-tmax", type=float,
                   help="trace length for --peaks, units of 1/t1 (default 400)")
    _add_output(p)

    p = sub.add_parser("sweep", help="N_T versus t2/t1", **kw)
    _add_chain(p)
    _add_time(p, with_tmax=False)
    _add_nm(p)
    _add_ratio(p)
    p.add_argument("--gammas", help="comma-separated gamma/t1 values, dimensionless (default --gamma/t1)")
    _add_output(p)

    p = sub.add_parser("disorder", help="disorder ensemble of parity indices and N_T", **kw)
    _add_chain(p)
    _add_time(p, with_tmax=False)
    _add_nm(p)
    _add_ratio(p)
    _add_disorder(p)
    _add_output(p)

    p = sub.add_parser("thresholds", help="coupling thresholds gamma1, gamma2 of the dissipative model", **kw)
    p.add_argument("--t1", type=float, help="intra-cell hopping, energy units (default 1)")
    p.add_argument("--t2", type=float, help="inter-cell hopping, energy units (default 1.5)")
    _add_output(p)
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config file must hold a JSON object")
    out = {}
    for k, v in cfg.items():
        key = k.replace("-", "_")
        if key not in DEFAULTS:
            raise ValidationError(f"unknown config key {k!r}")
        out[key] = v
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and explicit flags (in increasing priority)."""
    given = {k: v for k, v in vars(args).items() if v is not None}
    command = given.pop("command")
    cfg = dict(DEFAULTS)
    if "config" in given:
        cfg.update(_load_config(given.pop("config")))
    cfg.update(given)
    if cfg["seed"] is None:
        env = os.environ.get(SEED_ENV)
        try:
            cfg["seed"] = int(env) if env not in (None, "") else 0
        except ValueError:
            raise ValidationError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    cfg["command"] = command
    return cfg


def _floats(text, name) -> List[float]:
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"--{name} expects comma-separated numbers, got {text!r}") from None


def _check(cfg: dict):
    for key in ("t1", "t2", "gamma"):
        if not math.isfinite(cfg[key]) or cfg[key] < 0:
            raise ValidationError(f"--{key} must be a finite non-negative energy")
    if cfg["t1"] <= 0:
        raise ValidationError("--t1 must be positive")
    for key in ("tmax", "dt", "T"):
        if not cfg[key] > 0:
            raise ValidationError(f"--{key} must be positive")
    if cfg["cells"] < 3:
        raise ValidationError("--cells must be at least 3")
    if cfg["threads"] < 1:
        raise ValidationError("--threads must be at least 1")
    if cfg["ratio_steps"] < 1 or cfg["ratio_min"] <= 0 or cfg["ratio_max"] < cfg["ratio_min"]:
        raise ValidationError("ratio grid needs 0 < ratio-min <= ratio-max and ratio-steps >= 1")
    if cfg["realizations"] < 1:
        raise ValidationError("--realizations must be at least 1")
    if cfg["plot"] and not cfg["output"]:
        raise ValidationError("--plot needs --output")
    out = cfg["output"]
    if out:
        parent = os.path.dirname(os.path.abspath(out)) or "."
        if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
            raise ValidationError(f"output path {out!r} is not writable")
        if os.path.isdir(out):
            raise ValidationError(f"output path {out!r} is a directory")


def _spec(cfg) -> ChainSpec:
    return ChainSpec(cfg["cells"], cfg["t1"], cfg["t2"], cfg["gamma"], cfg["model"])


def _initial(cfg, n_cells):
    """Return ``(kind, psi)`` for the chosen initial state."""
    kind = str(cfg["initial"])
    if kind.startswith("file:"):
        path = kind[5:]
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read initial state: {exc}") from None
        text = raw.decode("utf-8").strip()
        amps = json.loads(text) if text.startswith("[") else np.loadtxt(path, ndmin=1)
        psi = build_initial_state("custom", n_cells, amps)
        cfg["initial_sha256"] = hashlib.sha256(raw).hexdigest()
        return "custom", psi
    return kind, build_initial_state(kind, n_cells)


def _ratios(cfg):
    return np.linspace(cfg["ratio_min"], cfg["ratio_max"], cfg["ratio_steps"])


def reproduce_command(cfg: dict) -> str:
    """Single invocation that regenerates the output from the resolved settings."""
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[cfg["command"]]
    words = ["ssh-probe", cfg["command"]]
    skip = {"output", "plot", "config", "format", "threads"}
    for action in sub._actions:
        if not action.option_strings or action.dest in skip or action.dest == "help":
            continue
        val = cfg.get(action.dest)
        if val is None or val is False:
            continue
        flag = action.option_strings[0]
        if val is True:
            words.append(flag)
        else:
            words += [flag, val if isinstance(val, str) else json.dumps(val)]
    return shlex.join(str(w) for w in words)


def _provenance(cfg) -> dict:
    settings = {k: v for k, v in cfg.items() if k not in ("plot",)}
    return {"package": "sshprobe", "version": __version__,
            "units": "energies in units of t1, times in 1/t1",
            "config": settings, "reproduce": reproduce_command(cfg)}


def _table(kind, rows, cfg, axis="none", values=()) -> SweepResult:
    return SweepResult(kind, axis, list(values), rows, _provenance(cfg))


def cmd_thresholds(cfg):
    if cfg["t1"] <= 0 or cfg["t2"] <= 0:
        raise ValidationError("thresholds need t1, t2 > 0")
    reg = existence_thresholds(cfg["t1"], cfg["t2"])
    rows = [{"quantity": "gamma1", "value": reg.gamma1},
            {"quantity": "gamma2", "value": reg.gamma2},
            {"quantity": "topological", "value": reg.topological}]
    return _table("thresholds", rows, cfg)


def cmd_bound_states(cfg):
    t1, t2, g = cfg["t1"], cfg["t2"], cfg["gamma"]
    if t2 <= 0 or g <= 0:
        raise ValidationError("bound states need t2 > 0 and gamma > 0")
    fn = dephasing_bound_states if cfg["model"] == "dephasing" else dissipative_bound_states
    rows = [{"origin": "analytic", "E": b.energy, "X": b.localization, "Y": b.imbalance,
             "parity": b.parity, "mode": b.mode} for b in fn(t1, t2, g)]
    if cfg["numeric"]:
        spec = _spec(cfg)
        for b in classify_numeric_bound_states(build_hamiltonian(spec)):
            rows.append({"origin": "numeric", "E": b.energy, "X": b.localization, "Y": None,
                         "parity": b.parity, "mode": "", "parity_index": b.parity_index})
    return _table("bound-states", rows, cfg)


def cmd_spectrum(cfg):
    spec = _spec(cfg)
    if cfg["axis"]:
        if cfg["axis_steps"] < 1 or cfg["axis_min"] < 0 or cfg["axis_max"] < cfg["axis_min"]:
            raise ValidationError("axis grid needs 0 <= axis-min <= axis-max and axis-steps >= 1")
        values = np.linspace(cfg["axis_min"], cfg["axis_max"], cfg["axis_steps"])
        res = spectrum_sweep(spec, cfg["axis"], values, threads=cfg["threads"])
        res.provenance.update(_provenance(cfg))
        return res
    from .dynamics import eigendecompose

    h = build_hamiltonian(spec)
    es = eigendecompose(h)
    band = band_dispersion(spec.t1, spec.t2)
    bound = band.outside_bands(es.eigenvalues, 1e-4 * (spec.t1 + spec.t2))
    rows = [{"index": i, "E": float(e), "parity_index": parity_index(es.eigenvectors[:, i]),
             "bound": bool(bound[i])} for i, e in enumerate(es.eigenvalues)]
    return _table("spectrum", rows, cfg)


def cmd_evolve(cfg):
    spec = _spec(cfg)
    if spec.model == "dephasing":
        kind, psi = _initial(cfg, spec.n_cells)
        trace = coherence_dephasing(spec, psi, cfg["tmax"], cfg["dt"], kind)
    else:
        trace = coherence_dissipative(spec, cfg["tmax"], cfg["dt"])
    rows = [{"t": float(t), "re_q": float(q.real), "im_q": float(q.imag), "L": float(abs(q) ** 2)}
            for t, q in zip(trace.times, trace.q)]
    return _table("evolve", rows, cfg, "t")


def cmd_nonmark(cfg):
    spec = _spec(cfg)
    kind, psi = (None, None)
    if spec.model == "dephasing":
        kind, psi = _initial(cfg, spec.n_cells)
    rec = n_t_point(spec, kind, cfg["T"], cfg["dt"], cfg["tburn"], psi0=psi)
    if cfg["peaks"]:
        if spec.model != "dissipative":
            raise ValidationError("--peaks applies to the dissipative model")
        pk = echo_peaks(spec, cfg["peak_tmax"], cfg["dt"])
        rec["peak_count"] = pk["count"]
        rec["peak_frequencies"] = pk["frequencies"]
    return _table("nonmark", [rec], cfg)


def cmd_sweep(cfg):
    spec = _spec(cfg)
    kinds = [k.strip() for k in str(cfg["initial"]).split(",") if k.strip()]
    if any(k.startswith("file:") for k in kinds):
        raise ValidationError("sweep takes named initial states only")
    for k in kinds:
        build_initial_state(k, spec.n_cells)
    gammas = _floats(cfg["gammas"], "gammas") if cfg["gammas"] is not None else None
    res = nonmarkov_sweep(spec, _ratios(cfg), gammas, kinds, cfg["T"], cfg["dt"], cfg["tburn"],
                          threads=cfg["threads"])
    res.provenance.update(_provenance(cfg))
    return res


def cmd_disorder(cfg):
    if cfg["model"] != "dephasing":
        raise ValidationError("disorder ensembles use the dephasing model")
    spec = _spec(cfg)
    deltas = _floats(cfg["delta"], "delta")
    if any(not 0 <= d < 1 for d in deltas):
        raise ValidationError("--delta values must lie in [0, 1)")
    seeds = range(cfg["seed"], cfg["seed"] + cfg["realizations"])
    kind = str(cfg["initial"])
    build_initial_state(kind, spec.n_cells)
    res = disorder_ensemble(spec, deltas, seeds, _ratios(cfg), cfg["T"], cfg["dt"], kind,
                            threads=cfg["threads"])
    res.provenance.update(_provenance(cfg))
    return res


COMMANDS = {
    "spectrum": cmd_spectrum, "bound-states": cmd_bound_states, "evolve": cmd_evolve,
    "nonmark": cmd_nonmark, "sweep": cmd_sweep, "disorder": cmd_disorder,
    "thresholds": cmd_thresholds,
}


def _emit(res: SweepResult, cfg):
    fmt, out = cfg["format"], cfg["output"]
    text = res.to_json() if fmt == "json" else res.to_csv()
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        if fmt == "csv" and res.aggregates:
            root, ext = os.path.splitext(out)
            res.to_csv(f"{root}_summary{ext or '.csv'}", aggregates=True)
        if cfg["plot"]:
            res.to_svg(os.path.splitext(out)[0] + ".svg")
    else:
        sys.stdout.write(text)
        if fmt == "csv" and res.aggregates:
            sys.stdout.write(res.to_csv(aggregates=True))


def run(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        _check(cfg)
        res = COMMANDS[cfg["command"]](cfg)
        _emit(res, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except np.linalg.LinAlgError as exc:
        print(f"error: computation failed: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
