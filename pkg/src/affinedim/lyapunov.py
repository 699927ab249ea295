"""Lyapunov spectrum estimation and the Lyapunov dimension.

The spectrum of a random matrix product is estimated by the standard QR
method: carry an orthonormal frame through the product, re-orthonormalize
at every step, and accumulate the logs of the triangular diagonal.  The
per-step accumulations also feed a batch-means standard error, which is what
downstream tolerance decisions (multiplicity clustering, iterate-invariance
checks) consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .rng import STREAM_LYAPUNOV, substream

SINGULAR_RTOL = 1e-12
PROB_TOL = 1e-12
DEFAULT_N_BATCHES = 20
# Default multiplicity clustering floor (nats); see multiplicity_m.
CLUSTER_FLOOR = 1e-3


@dataclass
class IFSSpec:
    """An iterated function system {x -> A_i x + v_i} with selection weights.

    Matrices must be invertible.  Contractivity (all operator norms < 1) is
    required by the spatial routines but not for Furstenberg/spectrum
    analysis, so it is exposed as a flag rather than enforced here.
    """

    matrices: np.ndarray
    translations: np.ndarray
    probs: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        A = np.asarray(self.matrices, dtype=float)
        v = np.asarray(self.translations, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ValueError("matrices must have shape (n_maps, d, d)")
        k, d, _ = A.shape
        if v.shape != (k, d):
            raise ValueError(f"translations must have shape ({k}, {d})")
        if p.shape != (k,):
            raise ValueError(f"probs must have shape ({k},)")
        if np.any(p <= 0):
            raise ValueError("all probabilities must be positive")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1 within {PROB_TOL:.0e}")
        for i, M in enumerate(A):
            sv = np.linalg.svd(M, compute_uv=False)
            if sv[-1] <= SINGULAR_RTOL * sv[0]:
                raise ValueError(f"matrix {i} is singular within tolerance")
        for arr in (A, v, p):
            arr.flags.writeable = False
        self.matrices, self.translations, self.probs = A, v, p

    @property
    def d(self) -> int:
        return self.matrices.shape[1]

    @property
    def n_maps(self) -> int:
        return self.matrices.shape[0]

    @cached_property
    def norms(self) -> np.ndarray:
        """Operator 2-norms of the matrices."""
        return np.linalg.svd(self.matrices, compute_uv=False)[:, 0]

    @property
    def is_contractive(self) -> bool:
        return bool(np.all(self.norms < 1.0))

    @cached_property
    def inverses(self) -> np.ndarray:
        inv = np.linalg.inv(self.matrices)
        inv.flags.writeable = False
        return inv

    def scaled(self, s: float) -> "IFSSpec":
        """Same system with every matrix multiplied by the scalar s."""
        if s == 0:
            raise ValueError("scale factor must be nonzero")
        return IFSSpec(s * self.matrices, self.translations.copy(), self.probs.copy(),
                       name=self.name)

    def with_translations(self, translations) -> "IFSSpec":
        return IFSSpec(self.matrices.copy(), np.asarray(translations, dtype=float),
                       self.probs.copy(), name=self.name)

    def apply(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.matrices[i] @ x + self.translations[i]


def singular_values(M: np.ndarray) -> np.ndarray:
    """Singular values of an invertible matrix, sorted non-increasing."""
    sv = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if sv[-1] <= SINGULAR_RTOL * sv[0]:
        raise ValueError("singular input matrix")
    return sv


@dataclass(frozen=True)
class LyapunovEstimate:
    gammas: np.ndarray
    stderr: np.ndarray
    n_steps: int
    seed: int


def estimate_lyapunov(matrices, p, n_steps: int, seed: int, *,
                      stream: int = STREAM_LYAPUNOV,
                      n_substreams: int = 1,
                      n_batches: int = DEFAULT_N_BATCHES,
                      top_k: int | None = None) -> LyapunovEstimate:
    """Monte Carlo estimate of the top-k Lyapunov exponents of a matrix product.

    Parameters
    ----------
    matrices : (n_maps, d, d) array
        Invertible matrices A_i.
    p : (n_maps,) array
        Selection probabilities.
    n_steps : int
        Total product length; split evenly across ``n_substreams``
        independent chains whose results are averaged in stream order.
    seed : int
        Master seed; chain i draws from substream (seed, stream, i).
    top_k : int, optional
        Track only the leading top_k exponents (frame of that width).
        Defaults to all d.

    Returns
    -------
    LyapunovEstimate
        gammas sorted non-increasing (nats per step) and per-exponent
        batch-means standard errors (>= ``n_batches`` batches).

    Notes
    -----
    The estimate is bit-reproducible for a fixed (seed, n_steps,
    n_substreams) triple; chains always run in stream order regardless of
    any physical parallelism.
    """
    A = np.asarray(matrices, dtype=float)
    p = np.asarray(p, dtype=float)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError("matrices must have shape (n_maps, d, d)")
    if np.any(p <= 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise ValueError("p must be a strictly positive probability vector")
    if n_steps < 1_000:
        raise ValueError("n_steps must be at least 1000 for a meaningful estimate")
    d = A.shape[1]
    k = d if top_k is None else int(top_k)
    if not 1 <= k <= d:
        raise ValueError("top_k out of range")

    counts = [n_steps // n_substreams] * n_substreams
    for i in range(n_steps % n_substreams):
        counts[i] += 1

    logs = np.empty((n_steps, k))
    pos = 0
    for chain, steps in enumerate(counts):
        rng = substream(seed, stream, chain)
        symbols = rng.choice(A.shape[0], size=steps, p=p)
        Q = np.eye(d, k)
        for t in range(steps):
            Q, r = np.linalg.qr(A[symbols[t]] @ Q)
            diag = np.abs(np.diagonal(r))
            if not np.all(diag > 0) or not np.all(np.isfinite(diag)):
                raise RuntimeError("overflow guard: degenerate triangular factor in QR sweep")
            logs[pos + t] = np.log(diag)
        pos += steps

    gammas = logs.mean(axis=0)
    batch_means = np.array([b.mean(axis=0) for b in np.array_split(logs, n_batches)])
    stderr = batch_means.std(axis=0, ddof=1) / math.sqrt(n_batches)
    order = np.argsort(-gammas, kind="stable")
    return LyapunovEstimate(gammas[order], stderr[order], n_steps, seed)


def entropy(p) -> float:
    """Shannon entropy (nats) of a probability vector."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("entropy requires strictly positive weights")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValueError("weights must sum to 1")
    return float(-(p * np.log(p)).sum())


@dataclass(frozen=True)
class Multiplicity:
    m: int
    gap: float
    ambiguous: bool


def multiplicity_m(gammas, tol_cluster: float) -> Multiplicity:
    """Size of the bottom cluster of the spectrum.

    m is the largest suffix of the (non-increasing) gammas lying within
    tol_cluster of the bottom exponent.  The spectral gap gamma_{d-m} -
    gamma_d is reported alongside; when that gap falls inside
    (tol_cluster, 2 tol_cluster) the call is flagged ambiguous, since a
    noise-level change in tolerance would change m.
    """
    g = np.asarray(gammas, dtype=float)
    d = len(g)
    bottom = g[-1]
    m = 0
    for i in range(d - 1, -1, -1):
        if g[i] - bottom <= tol_cluster:
            m += 1
        else:
            break
    gap = float(g[d - m - 1] - bottom) if m < d else math.inf
    ambiguous = m < d and tol_cluster < gap < 2 * tol_cluster
    return Multiplicity(m=m, gap=gap, ambiguous=ambiguous)


def k_index(h: float, gammas) -> int:
    """k = max{0 <= i <= d : 0 < h + gamma_1 + ... + gamma_i} (0 if the set is empty)."""
    g = np.asarray(gammas, dtype=float)
    best = 0 if h > 0 else None
    partial = h
    for i, gi in enumerate(g, start=1):
        partial += gi
        if partial > 0:
            best = i
    if best is None:
        best = 0
    return best


def lyapunov_dimension(h: float, gammas) -> float:
    """Lyapunov dimension D from entropy and a sorted negative spectrum.

    D = k - (h + gamma_1 + ... + gamma_k) / gamma_{k+1} when k < d, and
    D = -d h / (gamma_1 + ... + gamma_d) when k = d.
    """
    g = np.asarray(gammas, dtype=float)
    if np.any(np.diff(g) > 1e-12):
        raise ValueError("gammas must be sorted non-increasing")
    d = len(g)
    k = k_index(h, g)
    if k < d:
        if g[k] >= 0:
            raise ValueError("non-negative exponent at the dividing index: "
                             "Lyapunov dimension undefined for non-contractive spectra")
        D = k - (h + g[:k].sum()) / g[k]
    else:
        total = g.sum()
        if total >= 0:
            raise ValueError("exponent sum must be negative in the k = d branch")
        D = -d * h / total
    return float(D)


@dataclass(frozen=True)
class LyapunovReport:
    """Spectrum estimate plus the derived dimension quantities."""

    gammas: tuple
    stderr: tuple
    h: float
    m: int
    k: int
    D: float
    spectral_gap: float
    m_ambiguous: bool
    tol_cluster: float
    n_steps: int
    seed: int

    def to_record(self) -> dict:
        rec: dict = {}
        for i, (g, s) in enumerate(zip(self.gammas, self.stderr), start=1):
            rec[f"gamma_{i}"] = g
            rec[f"stderr_{i}"] = s
        rec.update(h=self.h, m=self.m, k=self.k, D=self.D,
                   spectral_gap=self.spectral_gap, m_ambiguous=self.m_ambiguous,
                   tol_cluster=self.tol_cluster, n_steps=self.n_steps, seed=self.seed)
        return rec


def analyze_spectrum(spec: IFSSpec, n_steps: int, seed: int, *,
                     tol_cluster: float | None = None,
                     stream: int = STREAM_LYAPUNOV,
                     n_substreams: int = 1) -> LyapunovReport:
    """Full spectrum report for a spec: exponents, entropy, m, k, D.

    D is NaN when the spectrum is not strictly contractive (the dimension
    formula has no meaning there); everything else is still reported.
    """
    est = estimate_lyapunov(spec.matrices, spec.probs, n_steps, seed,
                            stream=stream, n_substreams=n_substreams)
    h = entropy(spec.probs)
    tol = tol_cluster if tol_cluster is not None else max(5.0 * float(est.stderr.max()), CLUSTER_FLOOR)
    mult = multiplicity_m(est.gammas, tol)
    k = k_index(h, est.gammas)
    if est.gammas[0] < 0:
        D = lyapunov_dimension(h, est.gammas)
    else:
        D = math.nan
    return LyapunovReport(
        gammas=tuple(float(g) for g in est.gammas),
        stderr=tuple(float(s) for s in est.stderr),
        h=h, m=mult.m, k=k, D=D,
        spectral_gap=mult.gap, m_ambiguous=mult.ambiguous,
        tol_cluster=tol, n_steps=n_steps, seed=seed,
    )
