"""Furstenberg stationary measure on G_{d,m}: sampling and certification.

The stationary measure of the inverse-matrix action is sampled by the Markov
chain W <- A^{-1} W with i.i.d. matrix choices.  Stationarity is quantified
with a kernel maximum mean discrepancy between the sample and its one-step
pushforward; dimension with a pair-correlation fit; the irreducibility and
contraction hypotheses with an algebra-rank computation and an induced
exponent gap respectively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import corrfit
from .exterior import compound, num_basis
from .grassmann import Subspace, complement, orthonormalize, pairwise_dist, _dist_block
from .lyapunov import IFSSpec, estimate_lyapunov
from .rng import (STREAM_CHAIN, STREAM_CONTRACTION, STREAM_IRREDUCIBILITY,
                  STREAM_STATIONARITY, STREAM_TRACK, substream)

DEFAULT_BURN_IN = 1_000
DEFAULT_STRIDE = 8
DEFAULT_BLOCK_LEN = 25
DEFAULT_START_TILT = 1e-8
MAX_COMPOUND_SIZE = 70
WITNESS_INVARIANCE_TOL = 1e-8
SPAN_RANK_RTOL = 1e-10
# Floor for the MMD kernel bandwidth when a cloud is fully concentrated.
SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class ChainProvenance:
    seed: int
    burn_in: int
    n: int
    stride: int


@dataclass(frozen=True)
class GrassmannCloud:
    """Sample of subspaces, stored as an (n, d, m) stack of orthonormal frames."""

    frames: np.ndarray
    provenance: ChainProvenance

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=float)
        if f.ndim != 3:
            raise ValueError("frames must have shape (n, d, m)")
        f = f.copy()
        f.flags.writeable = False
        object.__setattr__(self, "frames", f)

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def d(self) -> int:
        return self.frames.shape[1]

    @property
    def m(self) -> int:
        return self.frames.shape[2]

    def subspaces(self) -> list[Subspace]:
        return [Subspace(f) for f in self.frames]

    def save_csv(self, path) -> None:
        """One row per point, frame entries column-major."""
        p = self.provenance
        header = f"# d={self.d} m={self.m} seed={p.seed} burnin={p.burn_in} stride={p.stride}"
        flat = self.frames.transpose(0, 2, 1).reshape(len(self), -1)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in flat:
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")

    @classmethod
    def load_csv(cls, path) -> "GrassmannCloud":
        meta = {}
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if "=" in tok:
                            k, v = tok.split("=", 1)
                            meta[k] = int(v)
                    continue
                rows.append([float(x) for x in line.split(",")])
        d, m = meta["d"], meta["m"]
        arr = np.array(rows).reshape(len(rows), m, d).transpose(0, 2, 1)
        prov = ChainProvenance(meta.get("seed", 0), meta.get("burnin", 0),
                               len(rows), meta.get("stride", 1))
        return cls(arr, prov)


def _default_start(d: int, m: int) -> np.ndarray:
    """Coordinate frame span{e_1..e_m} with a fixed infinitesimal tilt.

    The exact coordinate frame is invariant under axis-aligned systems, a
    measure-zero trap the chain could never leave; the tilt puts the start
    in general position without affecting post-burn-in statistics.
    """
    start = np.eye(d, m)
    rows = np.arange(m, d, dtype=float)[:, None]
    cols = np.arange(m, dtype=float)[None, :]
    start[m:, :] = DEFAULT_START_TILT / (1.0 + rows + cols)
    return orthonormalize(start)


def _push_once(frames: np.ndarray, mats: np.ndarray, symbols: np.ndarray) -> np.ndarray:
    """Apply mats[symbols[i]] to frame i and re-orthonormalize, batched."""
    moved = np.einsum("nij,njm->nim", mats[symbols], frames)
    if frames.shape[2] == 1:
        return moved / np.linalg.norm(moved, axis=1, keepdims=True)
    q, _ = np.linalg.qr(moved)
    return q


def sample_chain(spec: IFSSpec, m: int, *, burn_in: int = DEFAULT_BURN_IN,
                 n: int = 10_000, stride: int = DEFAULT_STRIDE, seed: int = 0,
                 w0: Subspace | None = None, n_chains: int = 1) -> GrassmannCloud:
    """Sample the stationary measure of W <- A^{-1} W on G_{d,m}.

    The first ``burn_in`` states are dropped, then every ``stride``-th state
    is kept until ``n`` points are collected.  With ``n_chains`` > 1 the
    points are split across independent chains on disjoint substreams and
    concatenated in chain order, so output is deterministic for a fixed
    (seed, n_chains).
    """
    if n < 1 or burn_in < 0 or stride < 1:
        raise ValueError("need n >= 1, burn_in >= 0, stride >= 1")
    d = spec.d
    if not 1 <= m <= d - 1:
        raise ValueError(f"m={m} must lie in 1..d-1")
    inv = spec.inverses
    start = _default_start(d, m) if w0 is None else np.asarray(w0.frame, dtype=float)
    if start.shape != (d, m):
        raise ValueError("w0 has the wrong shape")

    quotas = [n // n_chains] * n_chains
    for i in range(n % n_chains):
        quotas[i] += 1

    out = np.empty((n, d, m))
    pos = 0
    for chain, quota in enumerate(quotas):
        if quota == 0:
            continue
        rng = substream(seed, STREAM_CHAIN, chain)
        total = burn_in + (quota - 1) * stride + 1
        symbols = rng.choice(spec.n_maps, size=total, p=spec.probs)
        w = start.copy()
        kept = 0
        for t in range(total):
            w = inv[symbols[t]] @ w
            if m == 1:
                w /= np.linalg.norm(w)
            else:
                w = orthonormalize(w)
            if t >= burn_in and (t - burn_in) % stride == 0:
                out[pos + kept] = w
                kept += 1
        pos += kept
    prov = ChainProvenance(seed=seed, burn_in=burn_in, n=n, stride=stride)
    return GrassmannCloud(out, prov)


# ---------------------------------------------------------------------------
# Stationarity via kernel MMD


def median_bandwidth(dists: np.ndarray) -> float:
    """Median heuristic bandwidth with a floor for concentrated clouds."""
    tri = dists[np.triu_indices_from(dists, k=1)] if dists.ndim == 2 else dists
    med = float(np.median(tri)) if tri.size else 0.0
    return max(med, SIGMA_FLOOR)


def mmd_from_kernel(K: np.ndarray, na: int) -> float:
    """Biased (V-statistic) MMD between the first na rows and the rest."""
    kxx = K[:na, :na].mean()
    kyy = K[na:, na:].mean()
    kxy = K[:na, na:].mean()
    return math.sqrt(max(0.0, kxx + kyy - 2.0 * kxy))


@dataclass(frozen=True)
class StationarityResult:
    gap: float
    threshold_95: float
    null_gaps: np.ndarray
    passed: bool
    sigma: float
    n_probe: int

    def to_record(self) -> dict:
        return {"gap": self.gap, "threshold_95": self.threshold_95,
                "passed": self.passed, "sigma": self.sigma,
                "n_probe": self.n_probe, "n_boot": int(len(self.null_gaps))}


def _interleaved_block_split(n: int, n_probe: int,
                             block_len: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Index the leading part of a chain as alternating contiguous blocks.

    Consecutive chain states are correlated (the walk can linger near an
    almost-invariant direction for many steps), so the two probe samples are
    built from whole blocks rather than scattered points.  Even blocks feed
    one sample, odd blocks the other; returns (x_idx, z_idx, block_len).
    """
    L = max(1, min(block_len, n // 4))
    nb = min(2 * max(1, n_probe // L), n // L)
    nb -= nb % 2
    if nb < 2:
        raise ValueError("cloud too small for a two-sample probe")
    idx = np.arange(nb * L).reshape(nb, L)
    return idx[0::2].ravel(), idx[1::2].ravel(), L


def _pushforward_probe(cloud: GrassmannCloud, spec: IFSSpec, n_probe: int,
                       rng: np.random.Generator,
                       block_len: int = DEFAULT_BLOCK_LEN
                       ) -> tuple[np.ndarray, np.ndarray, int]:
    """(cloud blocks, pushed blocks, block_len) pair for the two-sample test."""
    x_idx, z_idx, L = _interleaved_block_split(len(cloud), n_probe, block_len)
    x = cloud.frames[x_idx]
    z = cloud.frames[z_idx]
    symbols = rng.choice(spec.n_maps, size=len(z), p=spec.probs)
    y = _push_once(z, spec.inverses, symbols)
    return x, y, L


def stationarity_gap(cloud: GrassmannCloud, spec: IFSSpec, *, n_probe: int = 2_000,
                     seed: int = 0) -> float:
    """MMD between the cloud and its one-step pushforward under the p-mix of A^{-1}."""
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    rng = substream(seed, STREAM_STATIONARITY)
    x, y, _ = _pushforward_probe(cloud, spec, n_probe, rng)
    pooled = np.concatenate([x, y], axis=0)
    dmat = pairwise_dist(pooled)
    sigma = median_bandwidth(dmat)
    K = np.exp(-(dmat / sigma) ** 2)
    return mmd_from_kernel(K, len(x))


def stationarity_test(cloud: GrassmannCloud, spec: IFSSpec, *, n_probe: int = 2_000,
                      n_boot: int = 200, seed: int = 0,
                      block_len: int = DEFAULT_BLOCK_LEN) -> StationarityResult:
    """Two-sample test of the fixed-point property.

    The observed gap is compared against the 95th percentile of gaps from
    ``n_boot`` resampled relabelings of the pooled sample (the null where the
    cloud and its pushforward share a law).  Relabelings move whole blocks of
    ``block_len`` consecutive states so the null respects the serial
    correlation of the chain; pointwise permutations would understate it and
    reject stationary clouds.
    """
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    rng = substream(seed, STREAM_STATIONARITY)
    x, y, L = _pushforward_probe(cloud, spec, n_probe, rng, block_len)
    na = len(x)
    pooled = np.concatenate([x, y], axis=0)
    dmat = pairwise_dist(pooled)
    sigma = median_bandwidth(dmat)
    K = np.exp(-(dmat / sigma) ** 2)
    gap = mmd_from_kernel(K, na)

    # MMD_V^2 for a +/-1 group labeling s is (s^T K s) / na^2; draw n_boot
    # block relabelings at once and evaluate through one GEMM.
    nb = 2 * (na // L)
    nb_side = nb // 2
    point_block = np.repeat(np.arange(nb), L)
    signs = np.empty((len(pooled), n_boot))
    for b in range(n_boot):
        in_x = rng.permutation(nb) < nb_side
        signs[:, b] = np.where(in_x[point_block], 1.0, -1.0)
    vals = np.einsum("ib,ib->b", signs, K @ signs) / (na * na)
    null_gaps = np.sqrt(np.maximum(0.0, vals))
    threshold = float(np.quantile(null_gaps, 0.95))
    return StationarityResult(gap=float(gap), threshold_95=threshold,
                              null_gaps=null_gaps, passed=bool(gap <= threshold + 1e-12),
                              sigma=float(sigma), n_probe=na)


def cloud_mmd(a: GrassmannCloud | np.ndarray, b: GrassmannCloud | np.ndarray,
              n_probe: int = 1_000, seed: int = 0) -> float:
    """MMD between two clouds (subsampled), shared median bandwidth."""
    fa = a.frames if isinstance(a, GrassmannCloud) else np.asarray(a)
    fb = b.frames if isinstance(b, GrassmannCloud) else np.asarray(b)
    rng = substream(seed, STREAM_STATIONARITY, 1)
    ia = rng.choice(len(fa), size=min(n_probe, len(fa)), replace=False)
    ib = rng.choice(len(fb), size=min(n_probe, len(fb)), replace=False)
    pooled = np.concatenate([fa[ia], fb[ib]], axis=0)
    dmat = pairwise_dist(pooled)
    sigma = median_bandwidth(dmat)
    K = np.exp(-(dmat / sigma) ** 2)
    return mmd_from_kernel(K, len(ia))


# ---------------------------------------------------------------------------
# Correlation dimension on the Grassmannian


def correlation_dimension(cloud: GrassmannCloud, r_lo: float | None = None,
                          r_hi: float | None = None, n_r: int = 24,
                          block: int = 512):
    """Pair-correlation dimension of the cloud in the projection metric.

    Returns (estimate, diagnostics); see corrfit.fit_correlation_dimension.
    """
    if len(cloud) < 1_000:
        raise ValueError("need at least 1000 points for a correlation fit")
    frames = cloud.frames

    def dist_rows(lo: int, hi: int) -> np.ndarray:
        return _dist_block(frames[lo:hi], frames)

    return corrfit.fit_correlation_dimension(len(cloud), dist_rows, r_lo=r_lo,
                                             r_hi=r_hi, n_r=n_r, block=block)


# ---------------------------------------------------------------------------
# Irreducibility of the induced action


@dataclass(frozen=True)
class IrreducibilityCertificate:
    verdict: str                      # irreducible-certified | reducible-certified | inconclusive
    witness: np.ndarray | None        # (q, r) orthonormal basis of the invariant subspace
    algebra_rank: int
    words_used: int

    def to_record(self) -> dict:
        return {"verdict": self.verdict, "algebra_rank": self.algebra_rank,
                "words_used": self.words_used,
                "witness_dim": None if self.witness is None else int(self.witness.shape[1])}


def _saturate_span(rows: np.ndarray, left_mults: list[np.ndarray], max_rounds: int,
                   max_rank: int) -> tuple[np.ndarray, int]:
    """Grow a linear span until closed under each left multiplication.

    rows: (r0, q2) initial spanning vectors (matrices flattened).  Returns the
    orthonormal row basis and the number of multiplication rounds applied.
    """
    basis = _orth_rows(rows)
    rounds = 0
    while rounds < max_rounds and basis.shape[0] < max_rank:
        rounds += 1
        cand = np.concatenate([_left_apply(B, basis) for B in left_mults], axis=0)
        before = basis.shape[0]
        basis = _orth_rows(np.concatenate([basis, cand], axis=0))
        if basis.shape[0] == before:
            break
    return basis, rounds


def _left_apply(B: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Apply B to span rows: plain vectors get B v, flattened matrices get B X."""
    if B.shape[1] == basis.shape[1]:
        return basis @ B.T
    q = B.shape[1]
    r = basis.shape[0]
    return (B @ basis.reshape(r, q, q)).reshape(r, -1)


def _orth_rows(rows: np.ndarray) -> np.ndarray:
    """Orthonormal basis for the row span, rank-truncated by SVD."""
    u, s, vt = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, rows.shape[1]))
    rank = int(np.sum(s > SPAN_RANK_RTOL * s[0]))
    return vt[:rank]


def irreducibility_check(matrices, m: int, L_max: int = 8,
                         seed: int = 0) -> IrreducibilityCertificate:
    """Decide irreducibility of the induced action on the m-th exterior power.

    The linear span of {compound(A_w, m) : |w| <= L} is grown until it
    stabilizes.  Full rank q^2 certifies irreducibility (Burnside; a proper
    invariant subspace would confine the algebra).  Otherwise invariant
    subspaces are hunted from eigen-seeds of random algebra elements and
    verified against every generator; a verified witness certifies
    reducibility.  Anything else is inconclusive: over the reals, a span
    rank below q^2 does not prove a witness exists.
    """
    A = np.asarray(matrices, dtype=float)
    d = A.shape[1]
    q = num_basis(d, m)
    if q > MAX_COMPOUND_SIZE:
        raise ValueError(f"q = C({d},{m}) = {q} exceeds dense-rank cap {MAX_COMPOUND_SIZE}")
    gens = [compound(M, m).entries for M in A]

    # Left-multiplication closure of span{I} is exactly span of all words.
    basis, rounds = _saturate_span(np.eye(q).reshape(1, -1), gens, L_max, q * q)
    rank = basis.shape[0]
    if rank == q * q:
        return IrreducibilityCertificate("irreducible-certified", None, rank, rounds)

    rng = substream(seed, STREAM_IRREDUCIBILITY)
    witness = _search_invariant_subspace(gens, basis, q, rng)
    if witness is not None:
        return IrreducibilityCertificate("reducible-certified", witness, rank, rounds)
    return IrreducibilityCertificate("inconclusive", None, rank, rounds)


def _search_invariant_subspace(gens: list[np.ndarray], algebra_basis: np.ndarray,
                               q: int, rng: np.random.Generator,
                               attempts: int = 4) -> np.ndarray | None:
    for _ in range(attempts):
        coeffs = rng.standard_normal(algebra_basis.shape[0])
        R = (coeffs @ algebra_basis).reshape(q, q)
        evals, evecs = np.linalg.eig(R)
        seeds: list[np.ndarray] = []
        for i, lam in enumerate(evals):
            v = evecs[:, i]
            if abs(lam.imag) < 1e-9:
                seeds.append(v.real[:, None])
            elif lam.imag > 0:
                seeds.append(np.column_stack([v.real, v.imag]))
        for seed_vecs in seeds:
            sub = _invariant_hull(seed_vecs, gens, q)
            if 0 < sub.shape[1] < q and _verify_invariant(sub, gens):
                return sub
    return None


def _invariant_hull(seed_vecs: np.ndarray, gens: list[np.ndarray], q: int) -> np.ndarray:
    basis, _ = _saturate_span(seed_vecs.T, [B for B in gens], max_rounds=q, max_rank=q)
    return basis.T


def _verify_invariant(sub: np.ndarray, gens: list[np.ndarray]) -> bool:
    P = sub @ sub.T
    for B in gens:
        leak = np.linalg.norm((np.eye(len(P)) - P) @ B @ sub, ord=2)
        if leak > WITNESS_INVARIANCE_TOL * np.linalg.norm(B, ord=2):
            return False
    return True


# ---------------------------------------------------------------------------
# Contraction (induced exponent gap) and bottom-subspace convergence


@dataclass(frozen=True)
class ContractionResult:
    eta_gap: float
    eta: tuple
    stderr: tuple
    gap_stderr: float
    verdict: bool

    def to_record(self) -> dict:
        return {"eta_gap": self.eta_gap, "eta_1": self.eta[0],
                "eta_2": self.eta[1] if len(self.eta) > 1 else None,
                "gap_stderr": self.gap_stderr, "verdict": self.verdict}


def contraction_check(spec: IFSSpec, m: int, n_steps: int = 20_000, seed: int = 0,
                      probs=None) -> ContractionResult:
    """Estimate the top-two exponent gap of the induced inverse chain.

    A positive gap (beyond 3 combined standard errors) is the numerical
    proxy for m-contraction: the induced products then converge to rank one
    in projective terms.
    """
    p = spec.probs if probs is None else np.asarray(probs, dtype=float)
    q = num_basis(spec.d, m)
    comps = np.stack([compound(M, m).entries for M in spec.inverses])
    if q == 1:
        return ContractionResult(0.0, (0.0,), (0.0,), 0.0, False)
    est = estimate_lyapunov(comps, p, n_steps, seed, stream=STREAM_CONTRACTION, top_k=2)
    gap = float(est.gammas[0] - est.gammas[1])
    gap_stderr = float(math.hypot(est.stderr[0], est.stderr[1]))
    verdict = gap > 3.0 * gap_stderr
    return ContractionResult(gap, tuple(map(float, est.gammas)),
                             tuple(map(float, est.stderr)), gap_stderr, verdict)


@dataclass(frozen=True)
class SubspaceTrack:
    ns: np.ndarray            # checkpoint indices n
    dists: np.ndarray         # dist(W_n, W_2n) per checkpoint
    frames: np.ndarray        # frame of W_n at each checkpoint (len(ns)+len pairs)
    rate_per_step: float      # fitted log-decay slope (nats/step), nan if not fit
    no_decay: bool

    def to_record(self) -> dict:
        return {"ns": [int(x) for x in self.ns],
                "dists": [float(x) for x in self.dists],
                "rate_per_step": self.rate_per_step,
                "no_decay": self.no_decay}


def bottom_subspace_track(spec: IFSSpec, m: int, n_steps: int = 512, seed: int = 0,
                          probs=None) -> SubspaceTrack:
    """Track the bottom-m left singular subspace of the running product.

    W_n is the span of the left singular vectors of A_{w|n} for the m
    smallest singular values; along a typical word it converges at the
    spectral-gap rate.  Computed through the inverse-transpose product,
    whose TOP-m left singular subspace is the same space but numerically
    well-conditioned however long the product gets.
    """
    d = spec.d
    if not 1 <= m <= d:
        raise ValueError("m out of range")
    p = spec.probs if probs is None else np.asarray(probs, dtype=float)
    rng = substream(seed, STREAM_TRACK)
    symbols = rng.choice(spec.n_maps, size=n_steps, p=p)
    letters = np.linalg.inv(spec.matrices).transpose(0, 2, 1)  # A^{-T}

    base = 8
    ns = []
    nval = base
    while 2 * nval <= n_steps:
        ns.append(nval)
        nval = int(math.ceil(nval * 1.5))
    ns = np.array(sorted(set(ns)), dtype=int)
    checkpoints = sorted(set(ns.tolist()) | {2 * n for n in ns.tolist()})

    Q = np.eye(d)
    S = np.eye(d)
    frames_at: dict[int, np.ndarray] = {}
    step = 0
    for n in range(1, (max(checkpoints) if checkpoints else 0) + 1):
        S = S @ letters[symbols[step]]
        step += 1
        q2, r = np.linalg.qr(S)
        Q = Q @ q2
        scale = np.abs(r).max()
        S = r / scale
        if n in checkpoints:
            u, _, _ = np.linalg.svd(S)
            frames_at[n] = Q @ u[:, :m]

    dists = np.array([
        _dist_block(frames_at[n][None], frames_at[2 * n][None])[0, 0] for n in ns
    ]) if len(ns) else np.array([])

    positive = dists > 1e-13
    if positive.sum() >= 3:
        fit = stats.linregress(ns[positive], np.log(dists[positive]))
        rate = float(fit.slope)
    else:
        rate = float("nan")

    if len(dists) >= 2 and dists[-1] > 1e-8 and dists[-1] > 0.5 * np.median(dists[: max(1, len(dists) // 3)]):
        no_decay = True
    else:
        no_decay = False

    frames = np.stack([frames_at[n] for n in ns]) if len(ns) else np.empty((0, d, m))
    return SubspaceTrack(ns=ns, dists=dists, frames=frames,
                         rate_per_step=rate, no_decay=no_decay)


# ---------------------------------------------------------------------------
# Transversality


def transversality_rate(cloud: GrassmannCloud, U: Subspace, tol: float = 1e-9) -> float:
    """Fraction of cloud points W with U^perp + W degenerate at tolerance tol."""
    if U.m != cloud.m:
        raise ValueError("U must have the cloud's dimension m")
    comp = complement(U).frame
    n = len(cloud)
    stacked = np.concatenate([np.broadcast_to(comp, (n, *comp.shape)), cloud.frames], axis=2)
    sv = np.linalg.svd(stacked, compute_uv=False)
    return float(np.mean(sv[:, -1] <= tol))
