"""Direction-measure sampling, stationarity, irreducibility, contraction."""

import math

import numpy as np
import pytest

from affinedim.furstenberg import (
    ChainProvenance,
    GrassmannCloud,
    bottom_subspace_track,
    cloud_mmd,
    contraction_check,
    correlation_dimension,
    irreducibility_check,
    sample_chain,
    stationarity_gap,
    stationarity_test,
    transversality_rate,
)
from affinedim.exterior import compound
from affinedim.grassmann import Subspace, dist, pairwise_dist, random_subspace
from affinedim.lyapunov import IFSSpec
from affinedim.verifier import builtin


def diag_spec(diags, probs=None):
    mats = np.stack([np.diag(d) for d in diags])
    k, d = mats.shape[0], mats.shape[1]
    if probs is None:
        probs = np.full(k, 1.0 / k)
    return IFSSpec(mats, np.zeros((k, d)), probs)


# ---------------------------------------------------------------------------
# Chain sampling


def test_chain_converges_to_dominant_inverse_direction():
    # Inverse iteration with diag(2,4) attracts every generic line to span{e2}.
    spec = diag_spec([(0.5, 0.25), (0.5, 0.25)])
    cloud = sample_chain(spec, 1, burn_in=200, n=500, seed=0)
    e2 = Subspace.coordinate(2, [1])
    worst = max(dist(W, e2) for W in cloud.subspaces())
    assert worst < 1e-6


def test_chain_exact_axis_start_is_a_fixed_point():
    # An exactly axis-aligned start never leaves the axis for diagonal maps;
    # only the default perturbed start can escape.
    spec = diag_spec([(0.5, 0.25), (0.5, 0.25)])
    w0 = Subspace.coordinate(2, [0])
    cloud = sample_chain(spec, 1, burn_in=50, n=50, seed=0, w0=w0)
    e1 = Subspace.coordinate(2, [0])
    assert max(dist(W, e1) for W in cloud.subspaces()) < 1e-12


def test_chain_provenance_and_shape():
    spec = builtin("e23")
    cloud = sample_chain(spec, 1, burn_in=100, n=256, stride=4, seed=9)
    assert len(cloud) == 256
    assert (cloud.d, cloud.m) == (2, 1)
    assert cloud.provenance == ChainProvenance(seed=9, burn_in=100, n=256, stride=4)


def test_chain_deterministic_and_seed_sensitive():
    spec = builtin("e23")
    a = sample_chain(spec, 1, n=64, seed=3).frames
    b = sample_chain(spec, 1, n=64, seed=3).frames
    c = sample_chain(spec, 1, n=64, seed=4).frames
    np.testing.assert_array_equal(a, b)
    assert np.abs(a - c).max() > 1e-6


def test_multi_chain_concatenation_deterministic():
    spec = builtin("e23")
    one = sample_chain(spec, 1, n=300, seed=5, n_chains=3).frames
    two = sample_chain(spec, 1, n=300, seed=5, n_chains=3).frames
    np.testing.assert_array_equal(one, two)
    assert len(one) == 300


def test_e23_cloud_nondegenerate():
    spec = builtin("e23")
    cloud = sample_chain(spec, 1, n=2_000, seed=0)
    diam = pairwise_dist(cloud.frames[::10]).max()
    assert diam > 0.5


def test_cloud_csv_round_trip(tmp_path):
    spec = builtin("e23")
    cloud = sample_chain(spec, 1, n=128, seed=2)
    path = tmp_path / "cloud.csv"
    cloud.save_csv(path)
    back = GrassmannCloud.load_csv(path)
    np.testing.assert_array_equal(back.frames, cloud.frames)
    assert back.provenance == cloud.provenance


# ---------------------------------------------------------------------------
# Stationarity


def test_stationarity_fixed_point_cloud_gap_zero():
    spec = diag_spec([(0.5, 0.25), (0.5, 0.25)])
    frames = np.tile(np.array([[0.0], [1.0]]), (400, 1, 1))
    cloud = GrassmannCloud(frames, ChainProvenance(0, 0, 400, 1))
    assert stationarity_gap(cloud, spec, seed=0) < 1e-9


def test_stationarity_accepts_chain_cloud():
    spec = builtin("e23")
    cloud = sample_chain(spec, 1, n=4_000, seed=1)
    res = stationarity_test(cloud, spec, seed=1)
    assert res.passed
    assert res.gap <= res.threshold_95 + 1e-12
    assert res.sigma > 0
    assert len(res.null_gaps) == 200


def test_stationarity_rejects_uniform_cloud():
    spec = builtin("e23")
    rng = np.random.default_rng(4)
    ang = rng.uniform(0.0, np.pi, 4_000)
    frames = np.stack([np.cos(ang), np.sin(ang)], axis=1)[:, :, None]
    cloud = GrassmannCloud(frames, ChainProvenance(4, 0, 4_000, 1))
    res = stationarity_test(cloud, spec, seed=1)
    assert not res.passed


def test_wrong_cloud_gap_dominates_chain_gap():
    spec = diag_spec([(0.5, 0.25), (0.45, 0.3)])
    chain = sample_chain(spec, 1, n=10_000, seed=0)
    rng = np.random.default_rng(7)
    ang = rng.uniform(0.0, np.pi, 10_000)
    wrong = GrassmannCloud(np.stack([np.cos(ang), np.sin(ang)], axis=1)[:, :, None],
                           ChainProvenance(7, 0, 10_000, 1))
    g_chain = stationarity_gap(chain, spec, seed=0)
    g_wrong = stationarity_gap(wrong, spec, seed=0)
    assert g_chain < g_wrong / 10


def test_cloud_mmd_small_between_same_law():
    spec = builtin("e23")
    a = sample_chain(spec, 1, n=4_000, seed=0)
    b = sample_chain(spec, 1, n=4_000, seed=1)
    rng = np.random.default_rng(2)
    ang = rng.uniform(0.0, np.pi, 4_000)
    wrong = np.stack([np.cos(ang), np.sin(ang)], axis=1)[:, :, None]
    near = cloud_mmd(a, b)
    far = cloud_mmd(a, wrong)
    assert near < far / 3


# ---------------------------------------------------------------------------
# Correlation dimension on the direction cloud


def test_rotation_orbit_dimension_is_one():
    rng = np.random.default_rng(8)
    ang = rng.uniform(0.0, np.pi, 4_000)
    frames = np.stack([np.cos(ang), np.sin(ang)], axis=1)[:, :, None]
    cloud = GrassmannCloud(frames, ChainProvenance(8, 0, 4_000, 1))
    est, diag = correlation_dimension(cloud)
    assert abs(est - 1.0) < 0.1
    assert diag.r_squared > 0.99


def test_correlation_dimension_requires_enough_points():
    frames = np.tile(np.array([[1.0], [0.0]]), (100, 1, 1))
    cloud = GrassmannCloud(frames, ChainProvenance(0, 0, 100, 1))
    with pytest.raises(ValueError):
        correlation_dimension(cloud)


def test_point_mass_cloud_dimension_zero():
    frames = np.tile(np.array([[1.0], [0.0]]), (1500, 1, 1))
    cloud = GrassmannCloud(frames, ChainProvenance(0, 0, 1500, 1))
    est, diag = correlation_dimension(cloud)
    assert est == 0.0


# ---------------------------------------------------------------------------
# Irreducibility certificates


def test_diagonal_family_reducible_with_verified_witness():
    mats = np.stack([np.diag([0.5, 0.25]), np.diag([0.4, 0.3])])
    cert = irreducibility_check(mats, 1)
    assert cert.verdict == "reducible-certified"
    w = cert.witness
    assert w is not None and w.shape[1] < 2
    # The witness must be invariant under every generator.
    for M in mats:
        img = M @ w
        proj = w @ (w.T @ img)
        assert np.linalg.norm(img - proj) < 1e-8 * np.linalg.norm(M, ord=2)
    rec = cert.to_record()
    assert rec["verdict"] == "reducible-certified"


def test_e23_irreducible_certified():
    spec = builtin("e23")
    cert = irreducibility_check(spec.matrices, 1)
    assert cert.verdict == "irreducible-certified"
    assert cert.algebra_rank == 4


def test_rotation_never_reducible():
    for angle in (1.0, 0.5, math.sqrt(2)):
        R = np.array([[[math.cos(angle), -math.sin(angle)],
                       [math.sin(angle), math.cos(angle)]]])
        cert = irreducibility_check(R, 1)
        assert cert.verdict in ("inconclusive", "irreducible-certified")
        assert cert.verdict != "reducible-certified"


def test_duality_verdicts_never_contradict():
    # m-irreducible iff (d-m)-irreducible; certified verdicts must agree.
    rng = np.random.default_rng(10)
    for trial in range(6):
        mats = rng.standard_normal((3, 3, 3)) + 2.5 * np.eye(3)
        left = irreducibility_check(mats, 1, seed=trial)
        right = irreducibility_check(mats, 2, seed=trial)
        certified = {"irreducible-certified", "reducible-certified"}
        if left.verdict in certified and right.verdict in certified:
            assert left.verdict == right.verdict
    diag3 = np.stack([np.diag([0.5, 0.3, 0.2]), np.diag([0.4, 0.25, 0.1])])
    a = irreducibility_check(diag3, 1)
    b = irreducibility_check(diag3, 2)
    assert a.verdict == b.verdict == "reducible-certified"


# ---------------------------------------------------------------------------
# Contraction and bottom-subspace convergence


def test_contraction_gap_diag_oracle():
    spec = diag_spec([(0.5, 0.125), (0.5, 0.125)])
    res = contraction_check(spec, 1, n_steps=5_000, seed=0)
    assert res.verdict
    np.testing.assert_allclose(res.eta_gap, 2 * math.log(2), atol=1e-6)


def test_contraction_conformal_family_fails():
    c, s = math.cos(0.9), math.sin(0.9)
    mats = np.stack([0.5 * np.array([[c, -s], [s, c]]),
                     0.4 * np.array([[c, s], [-s, c]])])
    spec = IFSSpec(mats, np.zeros((2, 2)), [0.5, 0.5])
    res = contraction_check(spec, 1, n_steps=5_000, seed=0)
    assert not res.verdict
    assert abs(res.eta_gap) < 0.01


def test_contraction_full_degree_trivial():
    spec = diag_spec([(0.5, 0.25), (0.25, 0.5)])
    res = contraction_check(spec, 2, n_steps=1_000, seed=0)
    assert res.eta_gap == 0.0
    assert not res.verdict


def test_bottom_track_diagonal_is_constant_axis():
    spec = diag_spec([(0.5, 0.125), (0.5, 0.125)])
    track = bottom_subspace_track(spec, 1, n_steps=512, seed=0)
    assert not track.no_decay
    assert np.all(track.dists < 1e-10)


def test_bottom_track_decays_for_generic_system():
    spec = builtin("e23", scale=0.18)
    track = bottom_subspace_track(spec, 1, n_steps=512, seed=0)
    assert not track.no_decay
    assert track.rate_per_step < 0
    assert track.dists[-1] < 1e-6


def test_bottom_track_flags_conformal_systems():
    c, s = math.cos(0.9), math.sin(0.9)
    mats = np.stack([0.5 * np.array([[c, -s], [s, c]]),
                     0.4 * np.array([[c, s], [-s, c]])])
    spec = IFSSpec(mats, np.zeros((2, 2)), [0.5, 0.5])
    track = bottom_subspace_track(spec, 1, n_steps=512, seed=0)
    assert track.no_decay


# ---------------------------------------------------------------------------
# Transversality


def test_transversality_aligned_and_generic():
    frames = np.tile(np.array([[1.0], [0.0]]), (200, 1, 1))
    cloud = GrassmannCloud(frames, ChainProvenance(0, 0, 200, 1))
    # U = span{e2}: U^perp = span{e1} coincides with every cloud point.
    assert transversality_rate(cloud, Subspace.coordinate(2, [1])) == 1.0
    assert transversality_rate(cloud, Subspace.coordinate(2, [0])) == 0.0


def test_transversality_monotone_in_tol():
    spec = builtin("e23")
    cloud = sample_chain(spec, 1, n=2_000, seed=0)
    rng = np.random.default_rng(11)
    U = random_subspace(2, 1, rng)
    rates = [transversality_rate(cloud, U, tol=t) for t in (1e-12, 1e-6, 1e-2)]
    assert rates[0] <= rates[1] <= rates[2]


# ---------------------------------------------------------------------------
# Plücker-embedding consistency


def test_psi_functoriality_under_compound_action():
    # The embedded image of M(W) is the normalized compound action on the
    # embedded image of W, up to sign.
    rng = np.random.default_rng(12)
    for _ in range(20):
        d, m = 4, 2
        W = random_subspace(d, m, rng)
        M = rng.standard_normal((d, d)) + 3 * np.eye(d)
        from affinedim.grassmann import act, proj_dist, psi
        left = psi(act(M, W))
        pushed = compound(M, m).apply(psi(W).direction)
        from affinedim.exterior import MultiVector
        unit = MultiVector(d, m, pushed.coeffs / pushed.norm)
        from affinedim.grassmann import ProjectivePoint
        # proj_dist is sqrt(1 - c^2), which turns epsilon-level rounding in c
        # into sqrt(epsilon)-level distance; 1e-6 is the honest float bound.
        assert proj_dist(left, ProjectivePoint(unit)) < 1e-6


def test_higher_grassmannian_chain_is_stationary():
    rng = np.random.default_rng(13)
    mats = rng.standard_normal((3, 3, 3)) + 3.0 * np.eye(3)
    mats *= 0.25
    spec = IFSSpec(mats, np.zeros((3, 3)), np.full(3, 1 / 3))
    cloud = sample_chain(spec, 2, n=4_000, seed=0)
    assert (cloud.d, cloud.m) == (3, 2)
    res = stationarity_test(cloud, spec, seed=0)
    assert res.passed
