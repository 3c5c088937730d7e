"""Shared oracles and generators for the test suite."""

import numpy as np
from scipy.optimize import linear_sum_assignment


def fd_gradient(func, x, h=1e-6):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        g[i] = (func(x + step) - func(x - step)) / (2 * h)
    return g


def fd_jacobian(func, x, h=1e-6):
    """Central-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(func(x))
    jac = np.zeros((f0.size, x.size))
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        jac[:, i] = (np.asarray(func(x + step)) - np.asarray(func(x - step))) / (2 * h)
    return jac


def fd_hessian(grad, x, h=1e-5):
    """Central differences of an analytic gradient, symmetrized."""
    x = np.asarray(x, dtype=float)
    hess = np.zeros((x.size, x.size))
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        hess[:, i] = (np.asarray(grad(x + step)) - np.asarray(grad(x - step))) / (2 * h)
    return 0.5 * (hess + hess.T)


def random_points(rng, k, n, scale=2.0, min_gap=0.35, max_tries=500):
    """k points in [-scale, scale]^n with pairwise distance >= min_gap.

    The gap shrinks automatically when k points cannot comfortably pack
    into the box at the requested separation (many points on a line).
    """
    min_gap = min(min_gap, 0.7 * scale * np.sqrt(n) / k)
    for _ in range(max_tries):
        pts = rng.uniform(-scale, scale, size=(k, n))
        gaps = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        gaps[np.diag_indices(k)] = np.inf
        if gaps.min() >= min_gap:
            return pts
    raise RuntimeError(f"no separated configuration found for k={k}, n={n}")


def match_as_multisets(found, expected):
    """Max pointwise distance under the best one-to-one matching."""
    found = np.asarray(found)
    expected = np.asarray(expected)
    assert found.shape == expected.shape
    cost = np.linalg.norm(found[:, None, :] - expected[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def product_loss(points, x):
    """Brute-force reference loss: prod_j ||x - u_j||^2.

    Vanishes exactly on the point set and is positive elsewhere, so it
    shares zero sets with any interpolated loss even though the two
    functions differ away from the zeros.
    """
    points = np.asarray(points)
    x = np.asarray(x)
    return float(np.prod(np.sum(np.abs(x - points) ** 2, axis=1)))
