"""Set recovery and clustering built on the fitting and extraction stages.

``recover_point_set`` chains the noisy fit, the Schur extraction, and the
construction of a loss whose minimizers are the recovered points.  Samples
are then clustered by descending that loss from each sample and reading
off which simplex vertex the descent reached.  Utilities for generating
benchmark data (bounded perturbations of a set, Gaussian mixtures) live
here too, all driven by explicit seeds.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .extraction import ZeroSet, extract_zero_set, real_projection
from .fitting import FitOptions, FitResult, SampleSet, fit_generating_matrix
from .generating_system import PointSet, solve_generating_matrix
from .loss_functions import GeneratingLoss, TransformedLoss, build_transformed_loss

__all__ = [
    "MinimizeResult",
    "ClusterAssignment",
    "RecoveryResult",
    "GmmSpec",
    "minimize_from",
    "assign_labels",
    "clustering_accuracy",
    "recover_point_set",
    "bounded_noise_sample",
    "gmm_sample",
    "random_gmm_spec",
]

# exhaustive permutation alignment is factorial; cap where it stays instant
MAX_ALIGNMENT_SIZE = 8


class MinimizeResult(NamedTuple):
    x: np.ndarray
    iterations: int
    converged: bool
    grad_norm: float


def minimize_from(loss, start, gradient_tol: float = 1e-8, max_iterations: int = 500):
    """Quasi-Newton descent with backtracking from a single start point.

    ``loss`` is either an object exposing ``value_and_grad`` or a callable
    returning ``(value, gradient)``.  Iterates until the gradient norm
    drops below ``gradient_tol`` or the iteration budget runs out; the
    last iterate is returned either way, with ``converged`` telling the
    two cases apart.
    """
    fun = loss.value_and_grad if hasattr(loss, "value_and_grad") else loss
    x = np.array(start, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a start vector, got shape {x.shape}")
    f, g = fun(x)
    dim = x.size
    h = np.eye(dim)
    iterations = 0
    for _ in range(max_iterations):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= gradient_tol:
            return MinimizeResult(x, iterations, True, gnorm)
        iterations += 1
        d = -h @ g
        slope = float(d @ g)
        if slope >= 0.0:
            # curvature model went bad; restart from steepest descent
            h = np.eye(dim)
            d = -g
            slope = -float(g @ g)
        t = 1.0
        f_new = g_new = None
        for _ in range(60):
            cand = x + t * d
            fc, gc = fun(cand)
            if fc <= f + 1e-4 * t * slope:
                f_new, g_new, x_new = fc, gc, cand
                break
            t *= 0.5
        if f_new is None:
            # line search stalled; no usable decrease left
            return MinimizeResult(x, iterations, False, gnorm)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            hy = h @ y
            yhy = float(y @ hy)
            h += ((sy + yhy) / sy**2) * np.outer(s, s)
            h -= (np.outer(hy, s) + np.outer(s, hy)) / sy
        x, f, g = x_new, f_new, g_new
    gnorm = float(np.linalg.norm(g))
    return MinimizeResult(x, iterations, gnorm <= gradient_tol, gnorm)


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-sample labels plus the descent diagnostics behind them."""

    labels: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    minimizers: np.ndarray

    def __post_init__(self):
        for name in ("labels", "converged", "iterations", "minimizers"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return self.labels.shape[0]


def _label_from_coords(z: np.ndarray, k: int) -> int:
    # vertex e_(i+1) carries label i, the origin carries label k-1 (the
    # anchor point); ties resolve to the lowest label
    dists = np.empty(k)
    for i in range(k - 1):
        e = np.zeros(k - 1)
        e[i] = 1.0
        dists[i] = float(np.linalg.norm(z - e))
    dists[k - 1] = float(np.linalg.norm(z))
    return int(np.argmin(dists))


def assign_labels(loss, recovered: PointSet, samples: SampleSet) -> ClusterAssignment:
    """Cluster every sample by descending the loss it sits on.

    With a ``TransformedLoss`` the converged point is mapped to simplex
    coordinates and labeled by its nearest vertex; any other loss labels
    by the nearest recovered point.  Descents that hit the iteration cap
    still get a label from their last iterate, flagged not converged.
    """
    if samples.n != recovered.n:
        raise ValueError(f"dimension mismatch: samples in R^{samples.n}, set in R^{recovered.n}")
    k = recovered.k
    npts = samples.size
    labels = np.empty(npts, dtype=np.int64)
    converged = np.empty(npts, dtype=bool)
    iterations = np.empty(npts, dtype=np.int64)
    minimizers = np.empty((npts, samples.n))
    use_simplex = isinstance(loss, TransformedLoss)
    ref = np.asarray(recovered.points.real)
    for j, v in enumerate(samples.samples):
        res = minimize_from(loss, v)
        converged[j] = res.converged
        iterations[j] = res.iterations
        minimizers[j] = res.x
        if use_simplex and k > 1:
            z = loss.simplex_coords(res.x)
            labels[j] = _label_from_coords(z, k)
        else:
            d = np.linalg.norm(ref - res.x[None, :], axis=1)
            labels[j] = int(np.argmin(d))
    return ClusterAssignment(
        labels=labels, converged=converged, iterations=iterations, minimizers=minimizers
    )


def clustering_accuracy(
    assignment: ClusterAssignment,
    truth,
    recovered: PointSet,
    true_means,
) -> float:
    """Fraction of samples labeled consistently with the ground truth.

    Recovered points are aligned to the true means by the permutation
    minimizing the summed squared distances (exhaustive search, so the
    set size is capped at 8), and labels are compared through that
    alignment.
    """
    truth = np.asarray(truth, dtype=np.int64)
    means = np.asarray(true_means, dtype=float)
    k = recovered.k
    if k > MAX_ALIGNMENT_SIZE:
        raise NotImplementedError(
            f"exhaustive alignment is limited to {MAX_ALIGNMENT_SIZE} points, got {k}"
        )
    if means.shape != (k, recovered.n):
        raise ValueError(f"expected {k} true means in R^{recovered.n}, got {means.shape}")
    if truth.shape != (assignment.size,):
        raise ValueError("one truth label per sample required")
    if truth.min() < 0 or truth.max() >= k:
        raise ValueError("truth labels must index the true means")
    pts = np.asarray(recovered.points.real)
    best_perm = None
    best_cost = np.inf
    for perm in itertools.permutations(range(k)):
        cost = sum(float(np.sum((pts[i] - means[perm[i]]) ** 2)) for i in range(k))
        if cost < best_cost:
            best_cost = cost
            best_perm = perm
    mapped = np.array([best_perm[label] for label in assignment.labels])
    return float(np.mean(mapped == truth))


@dataclass(frozen=True)
class RecoveryResult:
    """Everything the recovery pipeline produced, stage by stage."""

    fit: FitResult
    zero_set: ZeroSet
    recovered: PointSet
    loss: object
    timings: dict

    @property
    def k(self) -> int:
        return self.recovered.k


def _tag_stage(exc: Exception, stage: str) -> Exception:
    if not hasattr(exc, "stage"):
        exc.stage = stage
    return exc


def recover_point_set(
    samples: SampleSet,
    k: int,
    opts: FitOptions | None = None,
    want_real: bool = True,
    loss_kind: str = "transformed",
) -> RecoveryResult:
    """Fit, extract, and wrap a loss around the recovered k points.

    ``loss_kind`` selects the loss built on the recovered set:
    "transformed" (default) composes the simplicial loss with the
    appropriate coordinate change, "generating" interpolates a fresh
    generating system through the recovered points and squares it.  With
    ``want_real`` the recovered set is the real projection of the
    extracted zeros; otherwise the complex zeros are kept (the loss is
    still built on the projection, since the transforms are real).
    Errors propagate from the failing stage, tagged with a ``stage``
    attribute ("fit", "extract", or "loss").
    """
    if loss_kind not in ("transformed", "generating"):
        raise ValueError(f"unknown loss kind {loss_kind!r}")
    opts = opts or FitOptions()
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    try:
        fit = fit_generating_matrix(samples, k, opts)
    except Exception as exc:
        raise _tag_stage(exc, "fit")
    timings["fit"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        zeros = extract_zero_set(fit.g_star, seed=opts.seed)
    except Exception as exc:
        raise _tag_stage(exc, "extract")
    timings["extract"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        projected = real_projection(zeros)
        recovered = projected if want_real else PointSet(zeros.points, check_distinct=False)
        if loss_kind == "transformed":
            loss = build_transformed_loss(projected)
        else:
            loss = GeneratingLoss(solve_generating_matrix(projected))
    except Exception as exc:
        raise _tag_stage(exc, "loss")
    timings["loss"] = time.perf_counter() - t0

    return RecoveryResult(
        fit=fit, zero_set=zeros, recovered=recovered, loss=loss, timings=timings
    )


# -- sample generators ----------------------------------------------------


def bounded_noise_sample(
    points: PointSet,
    eps,
    counts,
    seed: int = 0,
    model: str = "truncated-normal",
):
    """Perturb each point inside its own box [-eps_i, eps_i]^n.

    ``eps`` is a single radius or one radius per point; ``counts`` gives
    the number of samples drawn around each point.  ``model`` is
    "truncated-normal" (normal draws with scale eps_i / 2, redrawn until
    inside the box; the default) or "uniform".  Returns the stacked
    ``SampleSet`` and the per-sample source index, grouped by point.
    """
    if model not in ("truncated-normal", "uniform"):
        raise ValueError(f"unknown noise model {model!r}")
    if not points.is_real:
        raise ValueError("noise sampling needs a real point set")
    k, n = points.k, points.n
    radii = np.broadcast_to(np.asarray(eps, dtype=float), (k,)).copy()
    if np.any(radii <= 0):
        raise ValueError("noise radii must be positive")
    sizes = np.asarray(counts, dtype=np.int64)
    if sizes.shape == ():
        sizes = np.full(k, int(sizes))
    if sizes.shape != (k,) or np.any(sizes < 1):
        raise ValueError("need a positive sample count per point")
    rng = np.random.default_rng(seed)
    chunks = []
    truth = []
    for i in range(k):
        need = int(sizes[i])
        if model == "uniform":
            offsets = rng.uniform(-radii[i], radii[i], (need, n))
        else:
            rows = []
            while len(rows) < need:
                cand = rng.normal(0.0, radii[i] / 2.0, (need, n))
                for row in cand:
                    if np.max(np.abs(row)) <= radii[i]:
                        rows.append(row)
                        if len(rows) == need:
                            break
            offsets = np.array(rows)
        chunks.append(points.points[i] + offsets)
        truth.extend([i] * need)
    return SampleSet(np.vstack(chunks)), np.array(truth, dtype=np.int64)


@dataclass(frozen=True)
class GmmSpec:
    """A Gaussian mixture: weights, means, and full covariances."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        mu = np.array(self.means, dtype=float)
        cov = np.array(self.covariances, dtype=float)
        if w.ndim != 1 or mu.ndim != 2 or w.shape[0] != mu.shape[0]:
            raise ValueError("need one weight per mean")
        k, n = mu.shape
        if cov.shape != (k, n, n):
            raise ValueError(f"expected covariances of shape ({k}, {n}, {n}), got {cov.shape}")
        if np.any(w <= 0) or abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        for i in range(k):
            defect = float(np.max(np.abs(cov[i] - cov[i].T)))
            if defect > 1e-12 * max(1.0, float(np.max(np.abs(cov[i])))):
                raise ValueError(f"covariance {i} is not symmetric")
            if float(np.linalg.eigvalsh(cov[i])[0]) <= 0.0:
                raise ValueError(f"covariance {i} is not positive definite")
        for arr in (w, mu, cov):
            arr.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def n(self) -> int:
        return self.means.shape[1]


def gmm_sample(spec: GmmSpec, size: int, seed: int = 0):
    """Draw ``size`` samples from the mixture; returns samples and labels."""
    if size < 1:
        raise ValueError(f"need a positive sample count, got {size}")
    rng = np.random.default_rng(seed)
    comps = rng.choice(spec.k, size=size, p=spec.weights)
    normals = rng.standard_normal((size, spec.n))
    chols = [np.linalg.cholesky(spec.covariances[i]) for i in range(spec.k)]
    out = np.empty((size, spec.n))
    for j in range(size):
        c = comps[j]
        out[j] = spec.means[c] + chols[c] @ normals[j]
    return SampleSet(out), comps.astype(np.int64)


def random_gmm_spec(
    n: int,
    k: int,
    seed: int = 0,
    separation: float = 6.0,
    diagonal: bool = False,
    scale: float = 0.5,
) -> GmmSpec:
    """A mixture with means separated relative to its covariance factors.

    Covariances are R^T R for random factors R with entries of order
    ``scale``; means are redrawn until every pair is at least
    ``separation`` times the largest singular value of any factor apart.
    """
    rng = np.random.default_rng(seed)
    factors = []
    for _ in range(k):
        if diagonal:
            r = np.diag(rng.uniform(0.3 * scale, scale, n))
        else:
            r = rng.uniform(-scale, scale, (n, n)) + np.eye(n) * 0.3 * scale
        factors.append(r)
    sigma_max = max(float(np.linalg.svd(r, compute_uv=False)[0]) for r in factors)
    gap = separation * sigma_max
    box = gap * max(2.0, 1.5 * k ** (1.0 / n))
    while True:
        means = rng.uniform(0.0, box, (k, n))
        ok = all(
            float(np.linalg.norm(means[i] - means[j])) >= gap
            for i in range(k)
            for j in range(i + 1, k)
        )
        if ok:
            break
    covs = np.array([r.T @ r for r in factors])
    return GmmSpec(weights=np.full(k, 1.0 / k), means=means, covariances=covs)
