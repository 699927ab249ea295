"""End-to-end analysis pipeline and the built-in example systems.

verify() chains spectrum estimation, stationary-direction sampling,
dimension estimates, and the separation/irreducibility certificates into
one report, then evaluates the projection-dimension criterion: with d x d
maps, multiplicity m, Lyapunov dimension D, and stationary-direction
dimension dim_F, the sufficient condition is

    dim_F + D > (m + 1) * (d - m)

together with m < d, certified separation, and no reducibility witness.
The condition is sufficient, not necessary; when it fails, the measured
dimension is still reported side by side with D.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .furstenberg import (GrassmannCloud, contraction_check, correlation_dimension,
                          irreducibility_check, sample_chain, stationarity_test)
from .lyapunov import IFSSpec, analyze_spectrum
from .rng import resolve_seed
from .selfaffine import (PointCloud, default_depth, det_sum, local_dimension_profile,
                         measure_dimension_estimate, sample_measure,
                         slice_dimension_profile, ssc_certify)

MAX_ITERATED_MAPS = 10_000


class ConsistencyError(AssertionError):
    """A certified result contradicts an unconditional arithmetic fact."""


# ---------------------------------------------------------------------------
# Spec file I/O


def load_spec(path) -> IFSSpec:
    """Read a system from JSON: {d, maps: [{A: row-major, v, p}, ...]}."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return spec_from_record(data)


def spec_from_record(data: dict) -> IFSSpec:
    d = int(data["d"])
    mats, trans, probs = [], [], []
    for entry in data["maps"]:
        A = np.asarray(entry["A"], dtype=float).reshape(d, d)
        mats.append(A)
        trans.append(np.asarray(entry["v"], dtype=float))
        probs.append(float(entry["p"]))
    return IFSSpec(np.stack(mats), np.stack(trans), np.array(probs),
                   name=str(data.get("name", "")))


def spec_record(spec: IFSSpec) -> dict:
    rec = {"name": spec.name, "d": spec.d, "maps": []}
    for A, v, p in zip(spec.matrices, spec.translations, spec.probs):
        rec["maps"].append({"A": [[float(x) for x in row] for row in A],
                            "v": [float(x) for x in v], "p": float(p)})
    return rec


def dump_spec(spec: IFSSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_record(spec), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Built-in example systems


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


# Unimodular shear pair: the classical positive-exponent family on the plane.
SHEAR_PAIR = (np.array([[1.0, 2.0], [0.0, 1.0]]),
              np.array([[1.0, 0.0], [2.0, 1.0]]))

# Translation pattern used when a scaled family needs default offsets.
_CORNER_PATTERN = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])

# Four-map anisotropic rotated family: the package's standard demonstration
# system.  Norm s < 1/2 for every map, distinct rotation angles on both
# sides of the anisotropy so no common invariant direction survives, and
# corner translations that separate the first-level pieces at depth one.
FLAGSHIP_S = 0.4
FLAGSHIP_G = 0.5
FLAGSHIP_THETAS = (0.3, 1.1, 1.9, 2.7)
FLAGSHIP_PHIS = (0.7, 1.5, 2.3, 0.1)
FLAGSHIP_SPREAD = 1.0

BUILTIN_NAMES = ("e23", "e24", "cf", "corners", "flagship")


def builtin(name: str, *, scale: float | None = None, translations=None,
            probs=None, E: float | None = None, L: float | None = None,
            ns=None, spread: float = 1.0) -> IFSSpec:
    """Construct a named example system.

    e23       shear pair [[1,2],[0,1]], [[1,0],[2,1]]
    e24       pair defined through its inverses [[E-L,-1],[1,0]], [[E+L,-1],[1,0]],
              requires |E| + |L| < 2
    cf        continued-fraction family: inverses [[0,1],[1,n]] for n in ns
    corners   four conformal maps x/3 + corners of the unit square
    flagship  four anisotropic rotated contractions with separated pieces

    For spatial use pass `scale` to contract the matrices (e23/e24/cf are
    published unscaled) and optionally `translations`; without explicit
    translations a scaled family gets +-1 corner offsets times `spread`.
    Unscaled families default to zero translations, which is all the
    direction-chain and spectrum analyses need.
    """
    if name == "e23":
        mats = np.stack(SHEAR_PAIR)
        p = np.array([0.5, 0.5]) if probs is None else np.asarray(probs, dtype=float)
        return _assemble(name, mats, p, scale, translations, spread)
    if name == "e24":
        if E is None or L is None:
            raise ValueError("e24 requires E and L")
        if abs(E) + abs(L) >= 2:
            raise ValueError("e24 requires |E| + |L| < 2")
        invs = np.array([[[E - L, -1.0], [1.0, 0.0]],
                         [[E + L, -1.0], [1.0, 0.0]]])
        mats = np.linalg.inv(invs)
        p = np.array([0.5, 0.5]) if probs is None else np.asarray(probs, dtype=float)
        return _assemble(name, mats, p, scale, translations, spread)
    if name == "cf":
        if ns is None:
            ns = (1, 2)
        ns = tuple(int(x) for x in ns)
        if len(ns) < 1 or any(x < 1 for x in ns):
            raise ValueError("cf requires entries n >= 1")
        invs = np.array([[[0.0, 1.0], [1.0, float(x)]] for x in ns])
        mats = np.linalg.inv(invs)
        p = (np.full(len(ns), 1.0 / len(ns)) if probs is None
             else np.asarray(probs, dtype=float))
        return _assemble(name, mats, p, scale, translations, spread)
    if name == "corners":
        mats = np.stack([np.eye(2) / 3.0] * 4)
        trans = np.array([[0.0, 0.0], [2 / 3, 0.0], [0.0, 2 / 3], [2 / 3, 2 / 3]])
        p = np.full(4, 0.25) if probs is None else np.asarray(probs, dtype=float)
        return IFSSpec(mats, trans, p, name=name)
    if name == "flagship":
        aniso = np.diag([1.0, math.exp(-FLAGSHIP_G)])
        mats = np.stack([FLAGSHIP_S * _rotation(t) @ aniso @ _rotation(f)
                         for t, f in zip(FLAGSHIP_THETAS, FLAGSHIP_PHIS)])
        trans = (FLAGSHIP_SPREAD * _CORNER_PATTERN if translations is None
                 else np.asarray(translations, dtype=float))
        p = np.full(4, 0.25) if probs is None else np.asarray(probs, dtype=float)
        return IFSSpec(mats, trans, p, name=name)
    raise ValueError(f"unknown builtin {name!r}; choose from {BUILTIN_NAMES}")


def _assemble(name: str, mats: np.ndarray, p: np.ndarray, scale: float | None,
              translations, spread: float) -> IFSSpec:
    if scale is not None:
        mats = scale * mats
        name = f"{name}-s{scale:g}"
    if translations is None:
        if scale is not None:
            translations = spread * _CORNER_PATTERN[: len(mats)]
        else:
            translations = np.zeros((len(mats), mats.shape[1]))
    return IFSSpec(mats, np.asarray(translations, dtype=float), p, name=name)


# ---------------------------------------------------------------------------
# Alphabet iteration


def iterate_spec(spec: IFSSpec, n: int) -> IFSSpec:
    """The system of all n-fold compositions with product weights.

    Words are enumerated in lexicographic symbol order, so n=1 returns an
    identical system.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if spec.n_maps ** n > MAX_ITERATED_MAPS:
        raise ValueError(f"iterated alphabet would have {spec.n_maps ** n} maps, "
                         f"cap is {MAX_ITERATED_MAPS}")
    mats, trans, probs = [], [], []
    for word in product(range(spec.n_maps), repeat=n):
        A = np.eye(spec.d)
        t = np.zeros(spec.d)
        for sym in word:
            t = t + A @ spec.translations[sym]
            A = A @ spec.matrices[sym]
        mats.append(A)
        trans.append(t)
        probs.append(float(np.prod(spec.probs[list(word)])))
    name = f"{spec.name}-iter{n}" if spec.name else f"iter{n}"
    return IFSSpec(np.stack(mats), np.stack(trans), np.array(probs), name=name)


# ---------------------------------------------------------------------------
# Full pipeline


@dataclass(frozen=True)
class VerifyOptions:
    seed: int | None = None
    n_lyapunov: int = 50_000
    n_chain: int = 10_000
    burn_in: int = 1_000
    stride: int = 8
    n_measure: int = 20_000
    measure_depth: int | None = None
    ssc_max_depth: int = 6
    scales: tuple = (6, 8, 10)
    n_frames: int = 64
    tol_cluster: float | None = None
    n_boot: int = 200
    n_contraction: int = 20_000

    def resolved_seed(self) -> int:
        return resolve_seed(self.seed)


@dataclass(frozen=True)
class VerificationReport:
    """Everything verify() measured, plus the clouds it sampled."""

    spec: IFSSpec
    seed: int
    lyapunov: object
    stationarity: object | None
    furstenberg_dim: float | None
    furstenberg_diag: object | None
    irreducibility: object
    contraction: object
    ssc: object
    det_sum: float
    measure_dim: float | None
    measure_diag: object | None
    local_dim: dict | None
    slice_profile: dict | None
    condition_lhs: float | None
    condition_rhs: float
    hypothesis_pass: bool
    conclusion_gap: float | None
    notes: tuple
    timings: dict = field(compare=False)
    fcloud: GrassmannCloud | None = field(compare=False, default=None)
    mcloud: PointCloud | None = field(compare=False, default=None)


def verify(spec: IFSSpec, options: VerifyOptions | None = None) -> VerificationReport:
    """Run the full measurement pipeline on one system.

    Every stochastic stage draws from a named substream of the master seed,
    so the report is reproducible and independent of execution order. The
    report carries every field on every path; stages that do not apply to
    the given system (no contraction, or a conformal spectrum) are reported
    as null with an explanatory note rather than omitted.
    """
    opt = options or VerifyOptions()
    seed = opt.resolved_seed()
    timings: dict[str, float] = {}
    notes: list[str] = []

    t0 = time.perf_counter()
    lyap = analyze_spectrum(spec, opt.n_lyapunov, seed, tol_cluster=opt.tol_cluster)
    timings["lyapunov"] = time.perf_counter() - t0
    d, m = spec.d, lyap.m
    if lyap.m_ambiguous:
        notes.append("multiplicity m is ambiguous at the chosen cluster tolerance")

    fcloud = None
    stat = None
    fdim = None
    fdiag = None
    if m < d:
        t0 = time.perf_counter()
        fcloud = sample_chain(spec, m, burn_in=opt.burn_in, n=opt.n_chain,
                              stride=opt.stride, seed=seed)
        timings["furstenberg_chain"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        stat = stationarity_test(fcloud, spec, n_probe=min(1_000, opt.n_chain),
                                 n_boot=opt.n_boot, seed=seed)
        timings["stationarity"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        fdim, fdiag = correlation_dimension(fcloud)
        timings["furstenberg_dim"] = time.perf_counter() - t0
    else:
        notes.append("m equals d: conformal-type spectrum, the projection "
                     "statement reduces to the similarity case; direction-"
                     "measure stages skipped")
        timings["furstenberg_chain"] = 0.0
        timings["stationarity"] = 0.0
        timings["furstenberg_dim"] = 0.0

    t0 = time.perf_counter()
    irr = irreducibility_check(spec.matrices, m, seed=seed)
    timings["irreducibility"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    contr = contraction_check(spec, m, n_steps=opt.n_contraction, seed=seed)
    timings["contraction"] = time.perf_counter() - t0
    if irr.verdict == "irreducible-certified" and contr.verdict:
        notes.append("strongly irreducible and contracting (numerical: full "
                     "matrix-algebra rank plus positive induced exponent gap)")

    t0 = time.perf_counter()
    ssc = ssc_certify(spec, max_depth=opt.ssc_max_depth)
    timings["ssc"] = time.perf_counter() - t0
    if not spec.is_contractive:
        notes.append("system is not contractive: no spatial analysis, "
                     "separation reported inconclusive")

    dsum = det_sum(spec)
    if ssc.verdict == "certified" and dsum >= 1.0:
        raise ConsistencyError(
            f"certified separation with det_sum = {dsum:.6f} >= 1; "
            "separated pieces cannot overfill volume")

    mcloud = None
    mdim = None
    mdiag = None
    local = None
    fprof = None
    if spec.is_contractive:
        t0 = time.perf_counter()
        depth = opt.measure_depth or default_depth(spec)
        mcloud = sample_measure(spec, opt.n_measure, depth=depth, seed=seed)
        timings["measure_sample"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        mdim, mdiag = measure_dimension_estimate(mcloud)
        local = local_dimension_profile(mcloud, seed=seed)
        timings["measure_dim"] = time.perf_counter() - t0

        if fcloud is not None and lyap.gammas[-1] < 0:
            t0 = time.perf_counter()
            fprof = slice_dimension_profile(spec, fcloud, mcloud, lyap.gammas[-1],
                                            n_scales=opt.scales,
                                            n_frames=opt.n_frames, seed=seed)
            timings["slice"] = time.perf_counter() - t0
        else:
            timings["slice"] = 0.0
    else:
        timings["measure_sample"] = 0.0
        timings["measure_dim"] = 0.0
        timings["slice"] = 0.0

    D = lyap.D if math.isfinite(lyap.D) else None
    condition_rhs = float((m + 1) * (d - m))
    condition_lhs = (fdim + D) if (fdim is not None and D is not None) else None
    hypothesis_pass = bool(
        condition_lhs is not None
        and condition_lhs > condition_rhs
        and m < d
        and irr.verdict != "reducible-certified"
        and ssc.verdict == "certified")
    conclusion_gap = (abs(mdim - D) if (mdim is not None and D is not None) else None)

    return VerificationReport(
        spec=spec, seed=seed, lyapunov=lyap, stationarity=stat,
        furstenberg_dim=fdim, furstenberg_diag=fdiag, irreducibility=irr,
        contraction=contr, ssc=ssc, det_sum=dsum, measure_dim=mdim,
        measure_diag=mdiag, local_dim=local, slice_profile=fprof,
        condition_lhs=condition_lhs, condition_rhs=condition_rhs,
        hypothesis_pass=hypothesis_pass, conclusion_gap=conclusion_gap,
        notes=tuple(notes), timings=timings, fcloud=fcloud, mcloud=mcloud)
