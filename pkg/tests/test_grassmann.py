"""Grassmannian geometry: frames, the projector metric, embeddings."""

import numpy as np
import pytest

from affinedim.grassmann import (
    Subspace,
    act,
    complement,
    dist,
    frames_to_subspaces,
    orthonormalize,
    pairwise_dist,
    pairwise_proj_dist,
    proj_dist,
    projector,
    psi,
    random_subspace,
    transversal,
)
from affinedim.rng import substream


def test_subspace_rejects_skew_frame():
    with pytest.raises(ValueError):
        Subspace(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_span_orthonormalizes():
    W = Subspace.span(np.array([[2.0, 1.0], [0.0, 1.0], [0.0, 0.0]]))
    np.testing.assert_allclose(W.frame.T @ W.frame, np.eye(2), atol=1e-12)
    assert (W.d, W.m) == (3, 2)


def test_coordinate_subspace():
    W = Subspace.coordinate(4, [1, 3])
    P = projector(W)
    np.testing.assert_array_equal(np.diag(P), [0, 1, 0, 1])


def test_dist_known_values():
    e1 = Subspace.coordinate(2, [0])
    e2 = Subspace.coordinate(2, [1])
    diag = Subspace.span(np.array([[1.0], [1.0]]))
    assert dist(e1, e1) == 0.0
    np.testing.assert_allclose(dist(e1, e2), 1.0, atol=1e-12)
    np.testing.assert_allclose(dist(e1, diag), np.sin(np.pi / 4), rtol=1e-12)


def test_dist_is_frame_independent():
    rng = np.random.default_rng(31)
    for _ in range(20):
        W = random_subspace(5, 2, rng)
        # Re-coordinatize the same subspace with a random rotation of the frame.
        q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
        W2 = Subspace(W.frame @ q)
        assert dist(W, W2) < 1e-9


def test_dist_symmetry_and_range():
    rng = np.random.default_rng(32)
    for _ in range(20):
        U = random_subspace(4, 2, rng)
        W = random_subspace(4, 2, rng)
        a, b = dist(U, W), dist(W, U)
        np.testing.assert_allclose(a, b, atol=1e-10)
        assert 0.0 <= a <= 1.0 + 1e-12


def test_act_diagonal_attracts_dominant_axis():
    W = Subspace.span(np.array([[1.0], [1.0]]))
    M = np.diag([4.0, 1.0])
    cur = W
    for _ in range(30):
        cur = act(M, cur)
    assert dist(cur, Subspace.coordinate(2, [0])) < 1e-9


def test_act_shape_mismatch():
    with pytest.raises(ValueError):
        act(np.eye(3), Subspace.coordinate(2, [0]))


def test_psi_unit_and_sign_invariance():
    rng = np.random.default_rng(33)
    W = random_subspace(4, 2, rng)
    p = psi(W)
    np.testing.assert_allclose(p.direction.norm, 1.0, rtol=1e-12)
    flipped = Subspace(W.frame[:, ::-1])
    assert proj_dist(p, psi(flipped)) < 1e-9


def test_proj_dist_equals_dist_for_lines():
    rng = np.random.default_rng(34)
    for _ in range(20):
        U = random_subspace(3, 1, rng)
        W = random_subspace(3, 1, rng)
        np.testing.assert_allclose(proj_dist(psi(U), psi(W)), dist(U, W),
                                   atol=1e-9)


def test_complement_is_orthogonal_and_involutive():
    rng = np.random.default_rng(35)
    W = random_subspace(5, 2, rng)
    C = complement(W)
    assert C.m == 3
    assert np.abs(W.frame.T @ C.frame).max() < 1e-12
    assert dist(complement(C), W) < 1e-9


def test_transversal_coordinate_cases():
    e1 = Subspace.coordinate(2, [0])
    e2 = Subspace.coordinate(2, [1])
    # U^perp + W must span: U = e2 has U^perp = e1, so W = e1 degenerates.
    assert transversal(e2, e1) is False
    assert transversal(e1, e1) is True
    with pytest.raises(ValueError):
        transversal(Subspace.coordinate(4, [0, 1, 2]), Subspace.coordinate(4, [0]))


def test_transversal_monotone_in_tol():
    rng = np.random.default_rng(36)
    U = random_subspace(3, 1, rng)
    W = random_subspace(3, 1, rng)
    stacked = np.hstack([complement(U).frame, W.frame])
    sv_min = np.linalg.svd(stacked, compute_uv=False)[-1]
    assert transversal(U, W, tol=sv_min / 2) is True
    assert transversal(U, W, tol=sv_min * 2) is False


def test_pairwise_dist_matches_scalar():
    rng = np.random.default_rng(37)
    for m in (1, 2):
        frames = np.stack([random_subspace(4, m, rng).frame for _ in range(12)])
        D = pairwise_dist(frames)
        assert D.shape == (12, 12)
        np.testing.assert_allclose(np.diag(D), 0.0, atol=1e-7)
        for i in (0, 3, 7):
            for j in (1, 5, 11):
                expect = dist(Subspace(frames[i]), Subspace(frames[j]))
                np.testing.assert_allclose(D[i, j], expect, atol=1e-9)


def test_pairwise_dist_two_batches_and_blocks():
    rng = np.random.default_rng(38)
    fa = np.stack([random_subspace(3, 1, rng).frame for _ in range(7)])
    fb = np.stack([random_subspace(3, 1, rng).frame for _ in range(5)])
    D = pairwise_dist(fa, fb, block=3)
    assert D.shape == (7, 5)
    np.testing.assert_allclose(D[2, 4],
                               dist(Subspace(fa[2]), Subspace(fb[4])), atol=1e-9)


def test_pairwise_proj_dist_matches_scalar():
    rng = np.random.default_rng(39)
    frames = np.stack([random_subspace(4, 2, rng).frame for _ in range(8)])
    D = pairwise_proj_dist(frames)
    for i in (0, 2):
        for j in (1, 7):
            expect = proj_dist(psi(Subspace(frames[i])), psi(Subspace(frames[j])))
            np.testing.assert_allclose(D[i, j], expect, atol=1e-9)


def test_random_subspace_deterministic_per_stream():
    a = random_subspace(4, 2, substream(5, 1)).frame
    b = random_subspace(4, 2, substream(5, 1)).frame
    c = random_subspace(4, 2, substream(6, 1)).frame
    np.testing.assert_array_equal(a, b)
    assert np.abs(a - c).max() > 1e-3


def test_orthonormalize_rank_collapse():
    with pytest.raises(ValueError):
        orthonormalize(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_frames_to_subspaces():
    rng = np.random.default_rng(40)
    frames = np.stack([random_subspace(3, 1, rng).frame for _ in range(4)])
    subs = frames_to_subspaces(frames)
    assert len(subs) == 4
    assert all(isinstance(s, Subspace) for s in subs)
