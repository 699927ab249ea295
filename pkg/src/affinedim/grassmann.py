"""Points and metrics on the Grassmannian G_{d,m}.

A subspace is carried as a d x m matrix with orthonormal columns.  Frames are
non-unique, so equality is always a metric statement (dist(W, U) < tol) and
never frame comparison.  The metric is the operator norm of the projector
difference, which for equal-dimensional subspaces equals the sine of the
largest principal angle; the batched helpers below use that identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exterior import MultiVector, wedge, wedge_columns

FRAME_ORTHO_TOL = 1e-10
# Relative singular-value floor below which an action is considered to have
# collapsed the frame rank (ill-conditioned matrix).
RANK_COLLAPSE_RTOL = 1e-12
DEFAULT_TRANSVERSAL_TOL = 1e-9


@dataclass(frozen=True)
class Subspace:
    """An m-dimensional subspace of R^d, stored as an orthonormal frame."""

    frame: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frame, dtype=float)
        if f.ndim == 1:
            f = f[:, None]
        if f.ndim != 2 or f.shape[0] < f.shape[1] or f.shape[1] < 1:
            raise ValueError(f"frame must be d x m with 1 <= m <= d, got shape {f.shape}")
        gram = f.T @ f
        if not np.allclose(gram, np.eye(f.shape[1]), atol=FRAME_ORTHO_TOL):
            raise ValueError("frame columns are not orthonormal; use Subspace.span to orthonormalize")
        f = f.copy()
        f.flags.writeable = False
        object.__setattr__(self, "frame", f)

    @property
    def d(self) -> int:
        return self.frame.shape[0]

    @property
    def m(self) -> int:
        return self.frame.shape[1]

    @classmethod
    def span(cls, matrix: np.ndarray) -> "Subspace":
        """Subspace spanned by the columns of an arbitrary full-rank matrix."""
        return cls(orthonormalize(np.asarray(matrix, dtype=float)))

    @classmethod
    def coordinate(cls, d: int, axes) -> "Subspace":
        """span{e_i : i in axes}, a convenience constructor."""
        f = np.zeros((d, len(axes)))
        for col, ax in enumerate(axes):
            f[ax, col] = 1.0
        return cls(f)


@dataclass(frozen=True)
class ProjectivePoint:
    """Unit multivector identified with its negation (image of psi)."""

    direction: MultiVector

    def __post_init__(self):
        if abs(self.direction.norm - 1.0) > FRAME_ORTHO_TOL:
            raise ValueError("projective point requires a unit multivector")


def orthonormalize(matrix: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the column space via SVD; raises on rank collapse."""
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    if s[-1] <= RANK_COLLAPSE_RTOL * s[0]:
        raise ValueError(
            f"rank collapse while orthonormalizing (sv ratio {s[-1] / max(s[0], 1e-300):.3e})"
        )
    return u


def projector(W: Subspace) -> np.ndarray:
    """Orthogonal projection onto W as a d x d matrix."""
    return W.frame @ W.frame.T


def dist(W: Subspace, U: Subspace) -> float:
    """Operator-norm distance ||P_W - P_U||; in [0, 1] for equal dimensions."""
    if (W.d, W.m) != (U.d, U.m):
        raise ValueError("subspace shape mismatch")
    return float(np.linalg.norm(projector(W) - projector(U), ord=2))


def act(M: np.ndarray, W: Subspace) -> Subspace:
    """Image subspace M(W), re-orthonormalized."""
    M = np.asarray(M, dtype=float)
    if M.shape != (W.d, W.d):
        raise ValueError("matrix/Subspace dimension mismatch")
    return Subspace(orthonormalize(M @ W.frame))


def psi(W: Subspace) -> ProjectivePoint:
    """Pluecker embedding: the unit wedge of the frame columns, up to sign."""
    w = wedge(W.frame)
    n = w.norm
    return ProjectivePoint(MultiVector(w.d, w.m, w.coeffs / n))


def proj_dist(a: ProjectivePoint, b: ProjectivePoint) -> float:
    """Projective metric (1 - <xi, eta>^2)^(1/2); sign-invariant."""
    u, v = a.direction, b.direction
    if (u.d, u.m) != (v.d, v.m):
        raise ValueError("projective point shape mismatch")
    c = float(np.dot(u.coeffs, v.coeffs))
    return float(np.sqrt(max(0.0, 1.0 - c * c)))


def complement(W: Subspace) -> Subspace:
    """Orthogonal complement W^perp as a Subspace of dimension d - m."""
    if W.m >= W.d:
        raise ValueError("complement of a full subspace is empty")
    full, _, _ = np.linalg.svd(W.frame, full_matrices=True)
    return Subspace(full[:, W.m:])


def transversal(U: Subspace, W: Subspace, tol: float = DEFAULT_TRANSVERSAL_TOL) -> bool:
    """True iff U^perp + W = R^d robustly.

    Decided by the smallest singular value of the d x d matrix
    [frame(U^perp) | frame(W)] exceeding tol.
    """
    if U.d != W.d:
        raise ValueError("ambient dimension mismatch")
    if (U.d - U.m) + W.m < U.d:
        raise ValueError("dim(U^perp) + dim(W) < d: the sum can never span")
    stacked = np.hstack([complement(U).frame, W.frame])
    sv = np.linalg.svd(stacked, compute_uv=False)
    return bool(sv[-1] > tol)


def random_subspace(d: int, m: int, rng: np.random.Generator) -> Subspace:
    """Haar-uniform random m-dimensional subspace of R^d."""
    g = rng.standard_normal((d, m))
    return Subspace(orthonormalize(g))


# ---------------------------------------------------------------------------
# Batched frame geometry.  Clouds store frames as an (n, d, m) array; the
# routines below avoid forming d x d projectors per pair by using the
# principal-angle identity ||P_W - P_U|| = sin(theta_max), with
# cos(theta_i) the singular values of F_W^T F_U.

def pairwise_dist(frames_a: np.ndarray, frames_b: np.ndarray | None = None,
                  block: int = 512) -> np.ndarray:
    """Full distance matrix between two frame batches, shape (na, nb)."""
    frames_a = np.asarray(frames_a, dtype=float)
    frames_b = frames_a if frames_b is None else np.asarray(frames_b, dtype=float)
    na, nb = frames_a.shape[0], frames_b.shape[0]
    out = np.empty((na, nb))
    for lo in range(0, na, block):
        hi = min(lo + block, na)
        out[lo:hi] = _dist_block(frames_a[lo:hi], frames_b)
    return out


def _dist_block(fa: np.ndarray, fb: np.ndarray) -> np.ndarray:
    m = fa.shape[2]
    if m == 1:
        cos = np.abs(np.einsum("adx,bdx->ab", fa, fb))
    else:
        prod = np.einsum("adi,bdj->abij", fa, fb)
        sv = np.linalg.svd(prod, compute_uv=False)
        cos = sv[..., -1]
    cos = np.clip(cos, 0.0, 1.0)
    return np.sqrt(np.maximum(0.0, 1.0 - cos * cos))


def frames_to_subspaces(frames: np.ndarray) -> list[Subspace]:
    return [Subspace(f) for f in frames]


def pairwise_proj_dist(frames_a: np.ndarray, frames_b: np.ndarray | None = None) -> np.ndarray:
    """Projective metric between psi-images of two frame batches."""
    ca = wedge_columns(np.asarray(frames_a, dtype=float))
    ca /= np.linalg.norm(ca, axis=1, keepdims=True)
    if frames_b is None:
        cb = ca
    else:
        cb = wedge_columns(np.asarray(frames_b, dtype=float))
        cb /= np.linalg.norm(cb, axis=1, keepdims=True)
    cos = ca @ cb.T
    return np.sqrt(np.maximum(0.0, 1.0 - cos * cos))
