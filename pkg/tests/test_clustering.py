"""Clustering steps compared against plain-loop reference implementations.

Random instances use modest sizes; the point is agreement with the naive
math, not scale.
"""

import random
from dataclasses import replace

import numpy as np
import pytest

from oracles import (adaptive_weights, fcm_centers, fcm_distances,
                     fcm_memberships, fcm_objective, planted_instance)
from wbansim.clustering import (INITIAL_WEIGHTS, normalize_features, objective,
                                run_wfcm, update_centers,
                                update_feature_weights, update_memberships,
                                weighted_distance)
from wbansim.config import SimConfig


def cluster_cfg(**over):
    base = dict(fuzziness=2.0, max_iter=40, tol=1e-5)
    base.update(over)
    return replace(SimConfig(), **base)


def random_instance(rng, n):
    X = np.array([[rng.random() for _ in range(4)] for _ in range(n)])
    V = np.array([[rng.random() for _ in range(4)] for _ in range(3)])
    W = np.abs(np.array([[rng.random() + 0.1 for _ in range(4)]
                         for _ in range(3)]))
    W = W / W.sum(axis=1, keepdims=True)
    return X, V, W


# --- feature normalization ----------------------------------------------------

def test_normalize_minmax_columns():
    raw = np.array([[0.0, 10.0], [5.0, 20.0], [10.0, 30.0]])
    out = normalize_features(raw)
    assert out[:, 0] == pytest.approx([0.0, 0.5, 1.0])
    assert out[:, 1] == pytest.approx([0.0, 0.5, 1.0])


def test_normalize_flat_column_is_midpoint():
    raw = np.array([[3.0, 1.0], [3.0, 2.0]])
    out = normalize_features(raw)
    assert out[:, 0] == pytest.approx([0.5, 0.5])


def test_normalize_missing_entries_land_midscale():
    raw = np.array([[1.0, 5.0], [9.0, 7.0], [5.0, 6.0]])
    missing = np.zeros_like(raw, dtype=bool)
    missing[2, 0] = True
    out = normalize_features(raw, missing=missing)
    # the missing sample neither stretches the scale nor inherits a value
    assert out[2, 0] == 0.5
    assert out[:2, 0] == pytest.approx([0.0, 1.0])


def test_normalize_fixed_spans():
    raw = np.array([[0.2, 50.0], [0.4, 80.0]])
    out = normalize_features(raw, spans=[(0.0, 1.0), None])
    assert out[:, 0] == pytest.approx([0.2, 0.4])   # physical range
    assert out[:, 1] == pytest.approx([0.0, 1.0])   # min-max fallback
    clipped = normalize_features(np.array([[2.0], [0.5]]), spans=[(0.0, 1.0)])
    assert clipped[:, 0] == pytest.approx([1.0, 0.5])


# --- individual update steps vs references ------------------------------------

def test_weighted_distance_matches_reference():
    rng = random.Random(21)
    X, V, W = random_instance(rng, 6)
    D_ref = fcm_distances(X.tolist(), V.tolist(), W.tolist())
    for i in range(6):
        for k in range(3):
            assert weighted_distance(X[i], V[k], W[k]) == pytest.approx(
                D_ref[i][k], abs=1e-12)


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0, 6.0])
def test_memberships_match_reference(m):
    rng = random.Random(int(m * 10))
    X, V, W = random_instance(rng, 25)
    U = update_memberships(X, V, W, m)
    U_ref = fcm_memberships(fcm_distances(X.tolist(), V.tolist(), W.tolist()), m)
    assert np.allclose(U, np.array(U_ref), atol=1e-10)
    assert U.sum(axis=1) == pytest.approx(np.ones(25), abs=1e-12)


def test_membership_zero_distance_rows():
    X = np.array([[0.5, 0.5], [0.9, 0.1]])
    V = np.array([[0.5, 0.5], [0.5, 0.5], [0.0, 0.0]])
    W = np.ones((3, 2))
    U = update_memberships(X, V, W, 2.0)
    # the on-center node splits membership across its two zero-distance clusters
    assert U[0] == pytest.approx([0.5, 0.5, 0.0])
    with pytest.raises(ValueError):
        update_memberships(X, V, W, 1.0)


def test_centers_match_reference():
    rng = random.Random(31)
    X, V, W = random_instance(rng, 30)
    U = update_memberships(X, V, W, 2.0)
    got = update_centers(X, U, 2.0)
    ref = fcm_centers(X.tolist(), U.tolist(), 2.0)
    assert np.allclose(got, np.array(ref), atol=1e-10)


def test_empty_cluster_keeps_previous_center():
    X = np.array([[0.1, 0.1], [0.2, 0.2]])
    U = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    prev = np.array([[9.0, 9.0], [4.0, 4.0], [7.0, 7.0]])
    got = update_centers(X, U, 2.0, previous=prev)
    assert got[1] == pytest.approx([4.0, 4.0])
    assert got[2] == pytest.approx([7.0, 7.0])
    with pytest.raises(ValueError):
        update_centers(X, U, 2.0, previous=None)


def test_weight_update_matches_reference():
    rng = random.Random(41)
    X, V, W0 = random_instance(rng, 30)
    U = update_memberships(X, V, W0, 2.0)
    got = update_feature_weights(X, U, W0, INITIAL_WEIGHTS, 2.0,
                                 rate_min=0.05, rate_max=0.30)
    ref = adaptive_weights(X.tolist(), U.tolist(), W0.tolist(),
                           INITIAL_WEIGHTS.tolist(), 2.0)
    assert np.allclose(got, np.array(ref), atol=1e-10)
    assert got.sum(axis=1) == pytest.approx(np.ones(3), abs=1e-12)


def test_objective_matches_reference():
    rng = random.Random(51)
    X, V, W = random_instance(rng, 20)
    U = update_memberships(X, V, W, 2.0)
    assert objective(X, U, V, W, 2.0) == pytest.approx(
        fcm_objective(X.tolist(), U.tolist(), V.tolist(), W.tolist(), 2.0),
        rel=1e-10)


# --- full loop ----------------------------------------------------------------

def test_run_wfcm_shapes_and_bounds():
    rng = random.Random(61)
    X = np.array([[rng.random() for _ in range(4)] for _ in range(40)])
    model = run_wfcm(X, cluster_cfg(), random.Random(5))
    assert model.memberships.shape == (40, 3)
    assert model.centers.shape == (3, 4)
    assert model.weights.shape == (3, 4)
    assert model.iterations <= cluster_cfg().max_iter
    assert all(j >= 0.0 for j in model.objective_trace)
    assert model.memberships.sum(axis=1) == pytest.approx(np.ones(40))


def test_fixed_weight_descent():
    rng = random.Random(71)
    X = np.array([[rng.random() for _ in range(4)] for _ in range(35)])
    model = run_wfcm(X, cluster_cfg(), random.Random(8), adapt_weights=False)
    trace = model.objective_trace
    for prev, nxt in zip(trace, trace[1:]):
        assert nxt <= prev + 1e-10
    assert np.array_equal(model.weights, INITIAL_WEIGHTS)


def test_planted_profiles_recovered():
    X, labels = planted_instance(random.Random(19))
    model = run_wfcm(np.array(X), cluster_cfg(), random.Random(2))
    assigned = model.memberships.argmax(axis=1)
    # score the best relabeling: cluster identity is init-dependent
    from itertools import permutations
    best = max(sum(perm[a] == lab for a, lab in zip(assigned, labels))
               for perm in permutations(range(3)))
    assert best >= 27  # at least 90 percent of 30


def test_run_wfcm_needs_three_rows():
    with pytest.raises(ValueError):
        run_wfcm(np.zeros((2, 4)), cluster_cfg(), random.Random(1))
