"""Lyapunov spectra, entropy, and the dimension arithmetic."""

import math

import numpy as np
import pytest

from affinedim.lyapunov import (
    IFSSpec,
    analyze_spectrum,
    entropy,
    estimate_lyapunov,
    k_index,
    lyapunov_dimension,
    multiplicity_m,
    singular_values,
)

LOG2 = math.log(2.0)


def diag_spec(diags, probs=None, translations=None):
    mats = np.stack([np.diag(d) for d in diags])
    k, d = mats.shape[0], mats.shape[1]
    if translations is None:
        translations = np.zeros((k, d))
    if probs is None:
        probs = np.full(k, 1.0 / k)
    return IFSSpec(mats, translations, probs)


# ---------------------------------------------------------------------------
# Spec container


def test_spec_validation_errors():
    good = np.stack([np.eye(2) / 2, np.eye(2) / 3])
    with pytest.raises(ValueError):
        IFSSpec(good[:, :, :1], np.zeros((2, 2)), [0.5, 0.5])
    with pytest.raises(ValueError):
        IFSSpec(good, np.zeros((2, 3)), [0.5, 0.5])
    with pytest.raises(ValueError):
        IFSSpec(good, np.zeros((2, 2)), [0.5, 0.4])
    with pytest.raises(ValueError):
        IFSSpec(good, np.zeros((2, 2)), [1.0, 0.0])
    singular = np.stack([np.eye(2), np.array([[1.0, 1.0], [1.0, 1.0]])])
    with pytest.raises(ValueError):
        IFSSpec(singular, np.zeros((2, 2)), [0.5, 0.5])


def test_spec_properties_and_helpers():
    spec = diag_spec([(0.5, 0.25), (0.25, 0.5)])
    assert spec.d == 2 and spec.n_maps == 2
    np.testing.assert_allclose(spec.norms, [0.5, 0.5])
    assert spec.is_contractive
    np.testing.assert_allclose(spec.inverses[0], np.diag([2.0, 4.0]))
    assert not spec.scaled(3.0).is_contractive
    moved = spec.with_translations([[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_array_equal(moved.apply(0, np.zeros(2)), [1.0, 0.0])


def test_singular_values_sorted():
    sv = singular_values(np.array([[0.1, 0.0], [0.0, 0.7]]))
    np.testing.assert_allclose(sv, [0.7, 0.1])
    with pytest.raises(ValueError):
        singular_values(np.ones((2, 2)))


# ---------------------------------------------------------------------------
# Exponent estimation against diagonal oracles


def test_equal_exponent_swap_family():
    # Swapping diag(1/2,1/4) with diag(1/4,1/2) makes both exponents
    # -(3/2) log 2 by the law of large numbers on coordinate log sums.
    spec = diag_spec([(0.5, 0.25), (0.25, 0.5)])
    est = estimate_lyapunov(spec.matrices, spec.probs, n_steps=20_000, seed=0)
    expect = -1.5 * LOG2
    for g, s in zip(est.gammas, est.stderr):
        assert abs(g - expect) < 3 * s
        assert abs(g - expect) < 5e-3


def test_distinct_diag_oracle():
    spec = diag_spec([(0.5, 0.1), (0.3, 0.2)])
    est = estimate_lyapunov(spec.matrices, spec.probs, n_steps=20_000, seed=1)
    cx = 0.5 * (math.log(0.5) + math.log(0.3))
    cy = 0.5 * (math.log(0.1) + math.log(0.2))
    expect = sorted([cx, cy], reverse=True)
    for g, s, e in zip(est.gammas, est.stderr, expect):
        assert abs(g - e) < 3 * s
        assert abs(g - e) < 5e-3


def test_estimate_is_seed_deterministic():
    spec = diag_spec([(0.5, 0.25), (0.25, 0.5)])
    a = estimate_lyapunov(spec.matrices, spec.probs, n_steps=5_000, seed=7)
    b = estimate_lyapunov(spec.matrices, spec.probs, n_steps=5_000, seed=7)
    c = estimate_lyapunov(spec.matrices, spec.probs, n_steps=5_000, seed=8)
    np.testing.assert_array_equal(a.gammas, b.gammas)
    assert np.abs(np.subtract(a.gammas, c.gammas)).max() > 0


def test_stderr_positive_and_shrinking():
    spec = diag_spec([(0.5, 0.1), (0.3, 0.2)])
    small = estimate_lyapunov(spec.matrices, spec.probs, n_steps=2_000, seed=3)
    big = estimate_lyapunov(spec.matrices, spec.probs, n_steps=50_000, seed=3)
    assert all(s > 0 for s in small.stderr)
    assert big.stderr[0] < small.stderr[0]


# ---------------------------------------------------------------------------
# Entropy, multiplicity, dimension arithmetic


def test_entropy_values():
    np.testing.assert_allclose(entropy([0.5, 0.5]), LOG2, rtol=1e-14)
    np.testing.assert_allclose(entropy([0.25] * 4), math.log(4), rtol=1e-14)
    np.testing.assert_allclose(entropy([1.0]), 0.0, atol=1e-14)
    with pytest.raises(ValueError):
        entropy([0.5, 0.5, 0.0])
    with pytest.raises(ValueError):
        entropy([0.5, 0.6])


def test_multiplicity_clusters():
    res = multiplicity_m([-1.0, -1.0 - 1e-5], tol_cluster=1e-3)
    assert res.m == 2 and not res.ambiguous
    res = multiplicity_m([-0.5, -1.0], tol_cluster=1e-3)
    assert res.m == 1 and not res.ambiguous
    np.testing.assert_allclose(res.gap, 0.5)
    # Gap inside (tol, 2 tol) is the knife-edge regime.
    res = multiplicity_m([-1.0, -1.0015], tol_cluster=1e-3)
    assert res.m == 1 and res.ambiguous


def test_k_index_oracles():
    assert k_index(LOG2, [math.log(0.1), math.log(0.1)]) == 0
    assert k_index(math.log(4), [math.log(1 / 3), math.log(1 / 3)]) == 1
    assert k_index(3.0, [-1.0, -1.0]) == 2


def test_dimension_oracles():
    d1 = lyapunov_dimension(math.log(4), [math.log(1 / 3), math.log(1 / 3)])
    np.testing.assert_allclose(d1, math.log(4) / math.log(3), rtol=1e-14)
    d0 = lyapunov_dimension(LOG2, [math.log(0.1), math.log(0.1)])
    np.testing.assert_allclose(d0, LOG2 / math.log(10), rtol=1e-14)
    # k = d branch: entropy exceeds total contraction.
    dd = lyapunov_dimension(3.0, [-1.0, -1.0])
    np.testing.assert_allclose(dd, 3.0)
    with pytest.raises(ValueError):
        lyapunov_dimension(1.0, [-1.0, -0.5])


def test_analyze_spectrum_flags_expanding_systems():
    spec = diag_spec([(2.0, 3.0), (2.5, 2.5)])
    rep = analyze_spectrum(spec, n_steps=2_000, seed=0)
    assert math.isnan(rep.D)


def test_analyze_spectrum_equal_exponent_family():
    spec = diag_spec([(0.5, 0.25), (0.25, 0.5)])
    rep = analyze_spectrum(spec, n_steps=20_000, seed=0)
    assert rep.m == 2
    assert not rep.m_ambiguous
    assert rep.h == entropy([0.5, 0.5])
    rec = rep.to_record()
    assert {"gamma_1", "gamma_2", "stderr_1", "stderr_2", "h", "m", "k",
            "D"} <= set(rec)


def test_report_tolerance_override():
    spec = diag_spec([(0.5, 0.25), (0.25, 0.5)])
    rep = analyze_spectrum(spec, n_steps=5_000, seed=0, tol_cluster=1e-9)
    # At an absurdly tight tolerance the sampled exponents separate.
    assert rep.m == 1
