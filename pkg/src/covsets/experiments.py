"""Seeded trial campaigns behind the command-line driver.

Each experiment kind supplies three pieces: a per-process context built once
from the configuration, a per-trial function returning CSV rows plus a small
payload, and a summary fold over the payloads. Trial ``t`` draws its
randomness from ``(master seed, t)`` alone, so results do not depend on how
trials are spread over workers.
"""
from __future__ import annotations

import csv
import datetime as _dt
import functools
import io
import json
import math
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, from_dict, validate
from .covering import hit_target, limsup_cube_counts, simulate_cover, trace_rows
from .errors import InsufficientDataError, OutOfTheoryError, UndefinedEstimateError
from .estimator import box_dimension, hit_probability, predict
from .limsup import (LimsupModel, PercolationRun, limsup_level_counts, limsup_trial_hit,
                     percolation_sample, retention_from_level, stream_key)
from .process import OrbitSource
from .sequences import (block_counts, bt_index_details, condition_c_check,
                        default_gap_constant, sparse_indices)
from .space import nesting_family_report

CSV_SCHEMA_VERSION = 1

COLUMNS = {
    "bt-index": ["k", "n_k", "m_k", "log_ratio"],
    "nesting-check": ["k", "cubes", "lower_bound", "upper_bound"],
    "cover-sim": ["trial", "k", "n_k", "m_k", "h_contained", "h_intersect", "s_k",
                  "hit_flag"],
    "hit-prob": ["trial", "k", "n_k", "m_k", "h_contained", "h_intersect", "s_k",
                 "hit_flag"],
    "dim-est": ["trial", "k", "count"],
    "percolate": ["trial", "level", "survivors", "hit_flag"],
    "limsup-hit": ["trial", "level", "retained", "hit_flag"],
}


@dataclass
class TrialResult:
    rows: list
    payload: dict


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, (np.integer, np.floating)):
        return _fmt(v.item())
    return v


# -- per-process context -----------------------------------------------------

@functools.lru_cache(maxsize=8)
def _context(cfg_json: str) -> dict:
    cfg = from_dict(json.loads(cfg_json))
    space = cfg.build_space()
    ctx = {"cfg": cfg, "space": space, "opt": cfg.options}
    if cfg.kind in ("cover-sim", "hit-prob", "dim-est", "bt-index"):
        seq = cfg.build_sequence(space)
        table = block_counts(seq, space.scale_b, cfg.depth)
        alpha = float(seq.alpha0) if seq.kind == "power" else bt_index_details(table)["estimate"]
        ctx.update(seq=seq, alpha=alpha)
        if "gap_c" in cfg.options:
            c = float(cfg.options["gap_c"])
        elif alpha < space.dim_s:
            c = default_gap_constant(space.dim_s, alpha, space.base)
        else:
            c = None
        ctx["c"] = c
        ctx["table"] = sparse_indices(table, c) if c else table
    if cfg.kind in ("cover-sim", "hit-prob", "dim-est", "percolate", "limsup-hit"):
        ctx["G"] = cfg.build_target(space)
    if cfg.kind == "limsup-hit":
        o = cfg.options
        ctx["model"] = LimsupModel(space, cfg.depth, float(o.get("gamma1", 0.5)),
                                   float(o["gamma2"]) if "gamma2" in o else None,
                                   o.get("field", "constant"), o.get("dependence", "independent"),
                                   bool(o.get("doubled", False)))
    if cfg.kind == "percolate":
        o = cfg.options
        if "p" in o:
            ctx["p"] = float(o["p"])
        else:
            ctx["p"] = retention_from_level(float(o.get("t", 0.5)), space.base,
                                            o.get("convention", "bits"))
    return ctx


def _trace(ctx, trial, full_blocks):
    cfg, space = ctx["cfg"], ctx["space"]
    if ctx["table"].c is None:
        raise UndefinedEstimateError("no gap constant: alpha >= s and options.gap_c unset")
    src = OrbitSource(space, cfg.seed, trial)
    return simulate_cover(space, ctx["table"], src, cfg.depth, full_blocks=full_blocks)


def _trial_cover(ctx, trial):
    cfg = ctx["cfg"]
    trace = _trace(ctx, trial, full_blocks=False)
    window = int(ctx["opt"].get("window", 1))
    k_min = max(3, cfg.depth - window + 1)
    hit = hit_target(trace, ctx["G"], k_min, cfg.depth)
    counts = {k: (len(r.contained), len(r.touched), r.m_k) for k, r in trace.blocks.items()}
    max_cubes = max(r.max_cubes for r in trace.blocks.values())
    return TrialResult(list(trace_rows(trace, ctx["G"], hit)),
                       {"hit": hit, "counts": counts, "max_cubes": max_cubes,
                        "bound": trace.locality_bound})


def _trial_dim(ctx, trial):
    trace = _trace(ctx, trial, full_blocks=True)
    counts = limsup_cube_counts(trace, ctx["G"], int(ctx["opt"].get("m0", 4)),
                                ctx["opt"].get("mode", "scale"))
    rows = [(trial, k, int(counts[k])) for k in range(1, len(counts))]
    return TrialResult(rows, {"counts": counts.tolist()})


def _trial_percolate(ctx, trial):
    cfg, space, G = ctx["cfg"], ctx["space"], ctx["G"]
    copies = int(ctx["opt"].get("copies", 1))
    first, hit = None, False
    for c in range(copies):
        res = percolation_sample(PercolationRun(space, ctx["p"], cfg.depth, G, cfg.seed, trial, c))
        if c == 0:
            first = res
        if res.hit:
            hit = True
            break
    slope = float("nan")
    if first.hit:
        try:
            slope = box_dimension(first.counts, space.base).slope
        except InsufficientDataError:
            pass
    rows = [(trial, n, cnt, int(hit)) for n, cnt in enumerate(first.counts)]
    return TrialResult(rows, {"hit": hit, "first": bool(first.hit), "slope": slope})


def _trial_limsup(ctx, trial):
    cfg, model = ctx["cfg"], ctx["model"]
    stream = stream_key(cfg.seed, trial)
    hit = limsup_trial_hit(model, ctx["G"], stream, int(ctx["opt"].get("window", 1)))
    payload = {"hit": hit}
    if ctx["opt"].get("count_levels", False):
        counts = limsup_level_counts(model, stream)
        rows = [(trial, n, int(counts[n]), int(hit)) for n in range(1, len(counts))]
        payload["counts"] = counts.tolist()
    else:
        rows = [(trial, cfg.depth, "", int(hit))]
    return TrialResult(rows, payload)


_TRIALS = {"cover-sim": _trial_cover, "hit-prob": _trial_cover, "dim-est": _trial_dim,
           "percolate": _trial_percolate, "limsup-hit": _trial_limsup}


def _run_trial(cfg_json: str, trial: int) -> TrialResult:
    ctx = _context(cfg_json)
    return _TRIALS[ctx["cfg"].kind](ctx, trial)


# -- summaries -----------------------------------------------------------------

def _freq(flags) -> dict:
    flags = list(flags)
    if len(flags) >= 30:
        return hit_probability(flags).to_dict()
    hits = sum(bool(f) for f in flags)
    return {"p_hat": hits / len(flags), "lo": None, "hi": None, "n": len(flags), "hits": hits}


def _prediction(ctx):
    space, G = ctx["space"], ctx["G"]
    dh, dp = G.dims()
    cc = condition_c_check(ctx["table"], ctx["alpha"]).holds_on_prefix
    return predict(space.dim_s, ctx["alpha"], dh, dp, condition_c=cc).to_dict()


def _summary_cover(ctx, results):
    cfg = ctx["cfg"]
    out = {"hit": _freq(r.payload["hit"] for r in results),
           "hit_notion": "containment in a sparse-block ball, tail window",
           "window": int(ctx["opt"].get("window", 1)),
           "alpha": ctx["alpha"], "gap_c": ctx["c"],
           "locality_ok": all(r.payload["max_cubes"] <= r.payload["bound"] for r in results),
           "b_outside_theory_range": ctx["table"].b_outside_theory_range}
    means = {}
    for k in range(1, cfg.depth + 1):
        vals = np.array([r.payload["counts"][k] for r in results], dtype=float)
        means[str(k)] = {"h_contained": vals[:, 0].mean(), "h_intersect": vals[:, 1].mean(),
                         "m_k": vals[:, 2].mean()}
    out["mean_counts"] = means
    try:
        out["prediction"] = _prediction(ctx)
        out["regime"] = out["prediction"]["regime"]
    except (OutOfTheoryError, ValueError) as exc:  # reported, not fatal
        out["prediction"] = {"error": str(exc)}
    return out


def _slope_or_none(counts, base, window=None):
    try:
        return box_dimension(counts, base, window)
    except InsufficientDataError:
        return None


def _summary_dim(ctx, results):
    space = ctx["space"]
    window = tuple(ctx["opt"]["window"]) if "window" in ctx["opt"] else None
    mean = np.mean([r.payload["counts"] for r in results], axis=0)
    est = _slope_or_none(mean, space.base, window)
    per = [e.slope for e in (_slope_or_none(r.payload["counts"], space.base, window)
                             for r in results) if e is not None]
    out = {"dimension": est.to_dict() if est else None,
           "mean_trial_slope": float(np.mean(per)) if per else None,
           "trials_with_slope": len(per), "alpha": ctx["alpha"],
           "m0": int(ctx["opt"].get("m0", 4)), "mode": ctx["opt"].get("mode", "scale"),
           "count_notion": "intersection with balls of the matching block"}
    try:
        out["prediction"] = _prediction(ctx)
        out["regime"] = out["prediction"]["regime"]
    except (OutOfTheoryError, ValueError) as exc:
        out["prediction"] = {"error": str(exc)}
    return out


def _summary_percolate(ctx, results):
    copies = int(ctx["opt"].get("copies", 1))
    single = _freq(r.payload["first"] for r in results)
    slopes = [r.payload["slope"] for r in results if not math.isnan(r.payload["slope"])]
    dh, _ = ctx["G"].dims()
    t = -math.log2(ctx["p"]) if ctx["opt"].get("convention", "bits") == "bits" else \
        -math.log(ctx["p"]) / math.log(ctx["space"].base)
    return {"hit": _freq(r.payload["hit"] for r in results), "single_copy": single,
            "copies": copies, "p": ctx["p"], "t": t,
            "predicted_union": 1 - (1 - single["p_hat"]) ** copies,
            "residual": (1 - single["p_hat"]) ** copies,
            "slope_lower_witness": max(slopes) if slopes else None,
            "prediction": {"dim_h_g": dh, "hits": dh > t}}


def _summary_limsup(ctx, results):
    model, G, space = ctx["model"], ctx["G"], ctx["space"]
    _, dp = G.dims()
    out = {"hit": _freq(r.payload["hit"] for r in results),
           "gamma1": model.gamma1, "gamma2": model.gamma2,
           "dependence": model.dependence, "doubled": model.doubled}
    pred = None
    if dp < model.gamma2:
        pred = 0.0
    elif dp > model.gamma1 and model.dependence == "independent":
        pred = 1.0
    out["prediction"] = {"dim_p_g": dp, "hit_probability": pred}
    if results and "counts" in results[0].payload:
        mean = np.mean([r.payload["counts"] for r in results], axis=0)
        est = _slope_or_none(mean, space.base)
        per = [e.slope for e in (_slope_or_none(r.payload["counts"], space.base)
                                 for r in results) if e is not None]
        out["dimension"] = est.to_dict() if est else None
        out["mean_trial_slope"] = float(np.mean(per)) if per else None
        if model.gamma1 == model.gamma2:
            out["prediction"]["dim_h"] = space.dim_s - model.gamma1
    return out


_SUMMARIES = {"cover-sim": _summary_cover, "hit-prob": _summary_cover,
              "dim-est": _summary_dim, "percolate": _summary_percolate,
              "limsup-hit": _summary_limsup}


def _single_bt(ctx):
    table, cfg = ctx["table"], ctx["cfg"]
    window = ctx["opt"].get("window")
    det = bt_index_details(table, int(window) if window else None)
    alpha = float(ctx["opt"].get("alpha", det["estimate"]))
    cc = condition_c_check(table, alpha, float(ctx["opt"].get("tol", 0.1)))
    rows = [tuple(_fmt(v) for v in row) for row in table.rows()]
    summary = {"estimate": det["estimate"], "raw_ratio_max": det["raw"],
               "slope": det["slope"], "window_blocks": det["blocks"],
               "condition_c": cc.to_dict(), "gap_c": ctx["c"], "K": cfg.depth,
               "b_outside_theory_range": table.b_outside_theory_range}
    return rows, summary


def _single_nesting(ctx):
    cfg, space = ctx["cfg"], ctx["space"]
    k_max = int(ctx["opt"].get("k_max", cfg.depth))
    rep = nesting_family_report(space, k_max)
    rows = []
    for k in range(0, k_max + 1):
        lo, hi = space.count_bounds(k)
        rows.append((k, len(space.alphabet) ** k, repr(lo), repr(hi)))
    return rows, rep.to_dict()


# -- driver --------------------------------------------------------------------

def version_string() -> str:
    try:
        desc = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"],
                              cwd=Path(__file__).resolve().parent, capture_output=True,
                              text=True, timeout=5)
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def render_csv(kind: str, rows, seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: covsets/{kind} v{CSV_SCHEMA_VERSION}; seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS[kind])
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def execute(cfg: ExperimentConfig) -> tuple:
    """Run the experiment; returns ``(summary dict, csv text)`` without touching disk."""
    validate(cfg)
    cfg_json = json.dumps(cfg.to_dict(), sort_keys=True)
    if cfg.kind in ("bt-index", "nesting-check"):
        ctx = _context(cfg_json)
        rows, results = (_single_bt if cfg.kind == "bt-index" else _single_nesting)(ctx)
    else:
        jobs = cfg.jobs or os.cpu_count() or 1
        if jobs == 1 or cfg.trials == 1:
            trials = [_run_trial(cfg_json, t) for t in range(cfg.trials)]
        else:
            run = functools.partial(_run_trial, cfg_json)
            chunk = max(1, cfg.trials // (4 * jobs))
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                trials = list(pool.map(run, range(cfg.trials), chunksize=chunk))
        rows = [row for t in trials for row in t.rows]
        results = _SUMMARIES[cfg.kind](_context(cfg_json), trials)
    summary = {"timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
               "version": version_string(), "seed": cfg.seed, "inputs": cfg.to_dict(),
               "results": results}
    return summary, render_csv(cfg.kind, rows, cfg.seed)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, set):
        return sorted(obj)
    return str(obj)


def _clean(obj):
    """Replace non-finite floats, which JSON cannot carry, by strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def run(cfg: ExperimentConfig) -> dict:
    """Execute and write ``summary.json`` and ``trials.csv`` under ``cfg.out``."""
    summary, text = execute(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trials.csv").write_text(text)
    (out / "summary.json").write_text(
        json.dumps(_clean(summary), indent=2, default=_json_default) + "\n")
    return summary
