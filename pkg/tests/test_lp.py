import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rhomboid_pool.errors import LPNumericalFailure
from rhomboid_pool.lp import WitnessLP, lp_maximize_margin


def _grid_margin(lp, lo=-3.0, hi=3.0, steps=601):
    """Max over a 2D grid of min_i (b_i - a_i.p): a lower bound converging to t*."""
    g = np.linspace(lo, hi, steps)
    px, py = np.meshgrid(g, g)
    pts = np.stack([px.ravel(), py.ravel()], axis=1)
    vals = (lp.bounds[None, :] - pts @ lp.normals.T).min(axis=1)
    return vals.max()


def test_empty_problem_is_unbounded():
    assert lp_maximize_margin(WitnessLP(np.zeros((0, 2)), np.zeros(0)))[0] == np.inf


def test_single_halfplane_is_unbounded():
    t, p = lp_maximize_margin(WitnessLP([[1.0, 0.0]], [0.0]))
    assert t == np.inf and p is None


def test_two_points_bisector():
    # Q = {x0} vs {x1}: unbounded (witness far on x0's side)
    pts = np.array([[0.0, 0.0], [1.0, 0.0]])
    lp = WitnessLP.from_subsets(pts, np.array([True, False]))
    assert lp_maximize_margin(lp)[0] == np.inf


def test_middle_point_of_three_collinear_is_bounded_negative():
    # a bounded problem with a known optimum: the middle point's cell versus both ends
    lp = WitnessLP([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], [1.0, 1.0, 2.0, 0.0])
    t, p = lp_maximize_margin(lp)
    # max_p min(1 - x, 1 + x, 2 - y, y) = 1 at x = 0, y = 1
    assert t == pytest.approx(1.0)
    assert np.all(lp.normals @ p + t <= lp.bounds + 1e-12)


def test_frozen_bounded_margin():
    # centre point of a square: its cell is the inner square, margin frozen from the closed form
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]], dtype=float)
    mask = np.zeros(5, bool)
    mask[4] = True
    t, p = lp_maximize_margin(WitnessLP.from_subsets(pts, mask))
    # |p-y|^2 - |p-x|^2 is maximised at the centre: 0.5 - 0 = 0.5
    assert t == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(p, [0.5, 0.5])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_bounded_lps_match_grid_search(seed):
    rng = np.random.default_rng(seed)
    # spread directions so the feasible region is bounded
    angles = np.linspace(0, 2 * np.pi, 8, endpoint=False) + rng.uniform(0, 0.3, 8)
    normals = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    lp = WitnessLP(normals, rng.uniform(0.0, 1.0, 8))
    t, p = lp_maximize_margin(lp)
    assert np.isfinite(t)
    assert np.all(normals @ p + t <= lp.bounds + 1e-9)
    grid = _grid_margin(lp)
    assert grid <= t + 1e-9
    assert t - grid <= 2 * 6.0 / 600  # grid spacing bound (unit normals)


def test_degenerate_lp_terminates():
    # many duplicate constraints: Bland's rule must not cycle
    pts = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [2, 2], [-1, 3]], dtype=float)
    for r in (1, 2, 3):
        for q in itertools.combinations(range(6), r):
            mask = np.zeros(6, bool)
            mask[list(q)] = True
            lp = WitnessLP.from_subsets(pts, mask, mask)
            lp_maximize_margin(lp)


def test_rejects_non_finite_data():
    with pytest.raises(LPNumericalFailure):
        WitnessLP([[np.inf, 0.0]], [1.0])
    with pytest.raises(LPNumericalFailure):
        WitnessLP([[1.0, 0.0]], [1.0, 2.0])
