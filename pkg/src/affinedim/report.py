"""Report assembly: JSON records, text summaries, and artifact files.

The JSON report is byte-stable for a fixed spec and seed: keys keep a fixed
order, every float is finite or null, and wall-clock timings are nulled out
(they live in the text summary, which is allowed to vary run to run).
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from . import rng
from .verifier import VerificationReport, spec_record

STREAM_NAMES = {
    "lyapunov": rng.STREAM_LYAPUNOV,
    "chain": rng.STREAM_CHAIN,
    "stationarity": rng.STREAM_STATIONARITY,
    "measure": rng.STREAM_MEASURE,
    "irreducibility": rng.STREAM_IRREDUCIBILITY,
    "contraction": rng.STREAM_CONTRACTION,
    "slice": rng.STREAM_SLICE,
    "track": rng.STREAM_TRACK,
    "transversality": rng.STREAM_TRANSVERSALITY,
}


def _clean(value):
    """Make a value JSON-safe: plain types, finite floats or None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return f if math.isfinite(f) else None
    return value


def report_record(vr: VerificationReport) -> dict:
    """The full result as an ordered, JSON-ready dictionary."""
    lyap = vr.lyapunov
    rec = {
        "spec": spec_record(vr.spec),
        "seeds": {"master": vr.seed, "streams": dict(STREAM_NAMES)},
        "lyapunov": lyap.to_record(),
        "stationarity": vr.stationarity.to_record() if vr.stationarity else None,
        "furstenberg_dim": {
            "estimate": vr.furstenberg_dim,
            "diagnostics": vr.furstenberg_diag.to_record() if vr.furstenberg_diag else None,
        },
        "irreducibility": vr.irreducibility.to_record(),
        "contraction": vr.contraction.to_record(),
        "ssc": vr.ssc.to_record(),
        "det_sum": vr.det_sum,
        "measure_dim": {
            "estimate": vr.measure_dim,
            "diagnostics": vr.measure_diag.to_record() if vr.measure_diag else None,
            "local": vr.local_dim,
        },
        "F_estimate": vr.slice_profile["extrapolated"] if vr.slice_profile else None,
        "slice": vr.slice_profile,
        "condition_lhs": vr.condition_lhs,
        "condition_rhs": vr.condition_rhs,
        "hypothesis_pass": vr.hypothesis_pass,
        "conclusion_gap": vr.conclusion_gap,
        "notes": list(vr.notes),
        "timings": None,
    }
    return _clean(rec)


def report_json(vr: VerificationReport) -> str:
    return json.dumps(report_record(vr), indent=2, allow_nan=False) + "\n"


def _fmt(x, nd=4) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, float) and not math.isfinite(x):
        return "n/a"
    return f"{x:.{nd}f}" if isinstance(x, float) else str(x)


def summary_text(vr: VerificationReport) -> str:
    """Human-readable run summary, including real wall-clock timings."""
    lyap = vr.lyapunov
    lines = []
    name = vr.spec.name or "(unnamed)"
    lines.append(f"system {name}: {vr.spec.n_maps} maps in dimension {vr.spec.d}, "
                 f"seed {vr.seed}")
    gam = ", ".join(f"{g:+.4f}±{s:.4f}" for g, s in zip(lyap.gammas, lyap.stderr))
    lines.append(f"exponents (nats/step): {gam}")
    lines.append(f"entropy h = {_fmt(lyap.h)}, multiplicity m = {lyap.m}"
                 + (" (ambiguous)" if lyap.m_ambiguous else "")
                 + f", k = {lyap.k}, D = {_fmt(lyap.D)}")
    if vr.stationarity is not None:
        s = vr.stationarity
        lines.append(f"direction chain: stationarity gap {_fmt(s.gap)} vs null 95th "
                     f"pct {_fmt(s.threshold_95)} -> {'ok' if s.passed else 'NOT stationary'}")
    if vr.furstenberg_dim is not None:
        fd = vr.furstenberg_diag
        lines.append(f"direction-measure dimension (correlation fit): "
                     f"{_fmt(vr.furstenberg_dim)} (R^2 = {_fmt(fd.r_squared)})")
    lines.append(f"irreducibility: {vr.irreducibility.verdict} "
                 f"(algebra rank {vr.irreducibility.algebra_rank})")
    c = vr.contraction
    lines.append(f"induced contraction gap: {_fmt(c.eta_gap)} "
                 f"(+/- {_fmt(c.gap_stderr)}) -> {'positive' if c.verdict else 'not resolved'}")
    lines.append(f"separation: {vr.ssc.verdict} at depth {vr.ssc.depth}, "
                 f"gap {_fmt(vr.ssc.gap)}; det_sum = {_fmt(vr.det_sum)}")
    if vr.measure_dim is not None:
        md = vr.measure_diag
        lines.append(f"measure dimension (correlation fit): {_fmt(vr.measure_dim)} "
                     f"(R^2 = {_fmt(md.r_squared)}); local median "
                     f"{_fmt(vr.local_dim['median'] if vr.local_dim else None)}")
    if vr.slice_profile is not None:
        per = ", ".join(f"n={k}: {v:.4f}" for k, v in vr.slice_profile["per_scale"].items())
        lines.append(f"slice estimate F: {per}; extrapolated "
                     f"{_fmt(vr.slice_profile['extrapolated'])}")
    lines.append(f"criterion: lhs {_fmt(vr.condition_lhs)} vs rhs {_fmt(vr.condition_rhs)} "
                 f"-> hypothesis {'PASS' if vr.hypothesis_pass else 'not established'}")
    if vr.conclusion_gap is not None:
        lines.append(f"|measure_dim - D| = {_fmt(vr.conclusion_gap)}")
    for note in vr.notes:
        lines.append(f"note: {note}")
    total = sum(vr.timings.values())
    stages = ", ".join(f"{k} {v:.2f}s" for k, v in vr.timings.items() if v > 0)
    lines.append(f"timings: total {total:.2f}s ({stages})")
    return "\n".join(lines) + "\n"


def write_report(vr: VerificationReport, out_dir, *, figures: bool = True) -> dict:
    """Write report.json, summary.txt, cloud CSVs, and figures to out_dir.

    Returns the paths written.  report.json and the CSVs are deterministic
    for a fixed spec and seed; summary.txt carries timings and is not.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    paths["report"] = os.path.join(out_dir, "report.json")
    with open(paths["report"], "w", encoding="utf-8") as fh:
        fh.write(report_json(vr))

    paths["summary"] = os.path.join(out_dir, "summary.txt")
    with open(paths["summary"], "w", encoding="utf-8") as fh:
        fh.write(summary_text(vr))

    if vr.fcloud is not None:
        paths["furstenberg_cloud"] = os.path.join(out_dir, "furstenberg_cloud.csv")
        vr.fcloud.save_csv(paths["furstenberg_cloud"])
    if vr.mcloud is not None:
        paths["measure_cloud"] = os.path.join(out_dir, "measure_cloud.csv")
        vr.mcloud.save_csv(paths["measure_cloud"])

    if figures:
        from . import figures as figmod
        figdir = os.path.join(out_dir, "figures")
        os.makedirs(figdir, exist_ok=True)
        paths.update(figmod.render_all(vr, figdir))
    return paths
