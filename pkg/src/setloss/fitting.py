"""Fitting a generating system to noisy samples of a finite set.

The sample objective is the averaged squared generator residual

    theta(G) = (1/N) sum_j ||phi_G(v_j)||^2,

a convex quadratic in G because every generator is linear in G.  Its
unconstrained minimizer is a column-wise linear least-squares problem on
the sample moment matrix.  To force the fitted system to actually have k
common zeros, theta is minimized subject to all multiplication-matrix
commutators vanishing.  That constraint is handled by a quadratic penalty
with geometrically growing weight, each round solved by a damped
Gauss-Newton (Levenberg-Marquardt) loop on the stacked residuals

    { phi_G(v_j) / sqrt(N) }  union  { sqrt(rho) * entries of [M_i, M_j] }.

The data block of the Jacobian is constant, so the normal equations are
assembled from its precomputed Gram blocks; only the small commutator
block is rebuilt per iteration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

import numpy as np
import scipy.linalg

from .errors import DegenerateConfigurationError
from .generating_system import (
    GeneratingMatrix,
    commutator_residual,
    multiplication_matrices,
)
from .monomial_basis import (
    MonomialBasis,
    border_monomials,
    monomial_matrix,
    standard_monomials,
)
from .numeric_kernels import min_eigenvalue_sym

__all__ = [
    "SampleSet",
    "FitOptions",
    "FitResult",
    "PenaltyModel",
    "average_loss",
    "moment_matrix",
    "least_squares_init",
    "fit_generating_matrix",
]


@dataclass(frozen=True)
class SampleSet:
    """A cloud of N real sample vectors in R^n; duplicates are allowed."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"expected a (N, n) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"need at least one sample and one coordinate, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class FitOptions:
    """Solver knobs for ``fit_generating_matrix``.

    The defaults implement a penalty weight starting at 1 and growing by
    a factor of 10 for at most 8 rounds, with the inner Gauss-Newton loop
    capped at 200 iterations per round.  Feasibility is declared when the
    total commutator norm drops below
    ``feasibility_factor * (1 + |G|_F)``.
    """

    rho0: float = 1.0
    rho_growth: float = 10.0
    max_rounds: int = 8
    max_inner_iterations: int = 200
    gradient_tol: float = 1e-10
    step_tol: float = 1e-12
    decrease_tol: float = 1e-12
    feasibility_factor: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.rho0 <= 0 or self.rho_growth <= 1:
            raise ValueError("penalty weight must be positive and strictly growing")
        if self.max_rounds < 1 or self.max_inner_iterations < 1:
            raise ValueError("iteration limits must be positive")
        for name in ("gradient_tol", "step_tol", "decrease_tol", "feasibility_factor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json(cls, payload: dict) -> "FitOptions":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown fit options: {sorted(unknown)}")
        kwargs = dict(payload)
        if "seed" in kwargs:
            kwargs["seed"] = int(kwargs["seed"])
        for name in ("max_rounds", "max_inner_iterations"):
            if name in kwargs:
                kwargs[name] = int(kwargs[name])
        return cls(**kwargs)


@dataclass(frozen=True)
class FitResult:
    """Outcome of a constrained fit."""

    g_star: GeneratingMatrix
    objective: float
    commutator_norm: float
    h_min_eig: float
    iterations: int
    rounds: int
    converged: bool
    theta_init: float
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "g_star": self.g_star.to_json(),
            "objective": self.objective,
            "commutator_norm": self.commutator_norm,
            "h_min_eig": self.h_min_eig,
            "iterations": self.iterations,
            "rounds": self.rounds,
            "converged": self.converged,
            "theta_init": self.theta_init,
            "warnings": list(self.warnings),
        }


def _design_matrices(samples: SampleSet, k: int):
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    b0 = standard_monomials(samples.n, k)
    b1 = border_monomials(b0)
    a = monomial_matrix(samples.samples, b0)
    b = monomial_matrix(samples.samples, b1)
    return b0, b1, a, b


def average_loss(gm: GeneratingMatrix, samples: SampleSet) -> float:
    """theta(G): mean squared generator residual over the samples."""
    if samples.n != gm.n:
        raise ValueError(f"dimension mismatch: samples in R^{samples.n}, system in R^{gm.n}")
    a = monomial_matrix(samples.samples, gm.basis)
    b = monomial_matrix(samples.samples, gm.border)
    r = b - a @ gm.entries
    return float(np.sum(r * r)) / samples.size


def moment_matrix(samples: SampleSet, k: int):
    """Scaled sample moment matrix H and its smallest eigenvalue.

    H = (2/N) sum_j [v_j]_B0 [v_j]_B0^T.  A strictly positive smallest
    eigenvalue certifies that the least-squares fit is strongly convex;
    it degrades gracefully to 0 for deficient sample distributions (for
    example N < k) and is reported rather than raised here.
    """
    _, _, a, _ = _design_matrices(samples, k)
    h = (2.0 / samples.size) * (a.T @ a)
    h = 0.5 * (h + h.T)
    return h, min_eigenvalue_sym(h)


def least_squares_init(samples: SampleSet, k: int) -> GeneratingMatrix:
    """Unconstrained minimizer of theta, one least-squares solve per column.

    Raises DegenerateConfigurationError when the sample monomials are
    rank deficient (in particular whenever N < k), reporting the smallest
    moment eigenvalue.
    """
    b0, b1, a, b = _design_matrices(samples, k)
    sol, _, rank, _ = scipy.linalg.lstsq(a, b)
    if rank < k:
        h = (2.0 / samples.size) * (a.T @ a)
        h = 0.5 * (h + h.T)
        min_eig = min_eigenvalue_sym(h)
        raise DegenerateConfigurationError(
            f"sample moment matrix is rank deficient (rank {rank} < {k}, "
            f"min eigenvalue {min_eig:.3e})",
            condition=float("inf"),
        )
    return GeneratingMatrix(basis=b0, border=b1, entries=np.ascontiguousarray(sol))


class PenaltyModel:
    """Residual stack and Jacobian of the penalized fitting problem.

    Parameters are the generating-matrix entries, flattened column by
    column (one border monomial at a time).  Residuals are the per-sample
    generator values scaled by 1/sqrt(N), followed by every commutator
    entry scaled by sqrt(rho).
    """

    def __init__(self, samples: SampleSet, k: int):
        self.b0, self.b1, self.a, self.b = _design_matrices(samples, k)
        self.size = samples.size
        self.k = k
        self.m = len(self.b1)
        self.n = samples.n
        # lift_col[i][q] = basis position of border[q] / x_i, or -1
        lift_col = np.full((self.n, self.m), -1, dtype=np.int64)
        for q, alpha in enumerate(self.b1):
            for i in range(self.n):
                if alpha[i] == 0:
                    continue
                lowered = list(alpha.exponents)
                lowered[i] -= 1
                key = tuple(lowered)
                if key in self.b0:
                    lift_col[i, q] = self.b0.position(key)
        self.lift_col = lift_col
        self.index_pairs = [
            (i, j) for i in range(self.n) for j in range(i + 1, self.n)
        ]
        self.ata = (self.a.T @ self.a) / samples.size
        self.atb = (self.a.T @ self.b) / samples.size

    # -- assembly ---------------------------------------------------------

    def matrix(self, g: np.ndarray) -> GeneratingMatrix:
        return GeneratingMatrix(basis=self.b0, border=self.b1, entries=g)

    def mult_mats(self, g: np.ndarray) -> list[np.ndarray]:
        mats = []
        for i in range(self.n):
            mat = np.zeros((self.k, self.k))
            for col, nu in enumerate(self.b0):
                target = nu.shifted(i)
                if target in self.b0:
                    mat[self.b0.position(target), col] = 1.0
                else:
                    mat[:, col] = g[:, self.b1.position(target)]
            mats.append(mat)
        return mats

    def commutator_vec(self, mats: list[np.ndarray]) -> np.ndarray:
        if not self.index_pairs:
            return np.zeros(0)
        blocks = [
            (mats[i] @ mats[j] - mats[j] @ mats[i]).reshape(-1)
            for i, j in self.index_pairs
        ]
        return np.concatenate(blocks)

    def commutator_jacobian(self, mats: list[np.ndarray]) -> np.ndarray:
        """d vec([M_i, M_j]) / d g, stacked over pairs; unscaled by rho."""
        k, m = self.k, self.m
        rows = len(self.index_pairs) * k * k
        jac = np.zeros((rows, k * m))
        for block, (i, j) in enumerate(self.index_pairs):
            mi, mj = mats[i], mats[j]
            base = block * k * k
            for q in range(m):
                ci = self.lift_col[i, q]
                cj = self.lift_col[j, q]
                if ci < 0 and cj < 0:
                    continue
                for p in range(k):
                    d = np.zeros((k, k))
                    if ci >= 0:
                        # dM_i = e_p e_ci^T enters as dM_i M_j - M_j dM_i
                        d[p, :] += mj[ci, :]
                        d[:, ci] -= mj[:, p]
                    if cj >= 0:
                        d[:, cj] += mi[:, p]
                        d[p, :] -= mi[cj, :]
                    jac[base : base + k * k, q * k + p] = d.reshape(-1)
        return jac

    def theta(self, g: np.ndarray) -> float:
        r = self.b - self.a @ g
        return float(np.sum(r * r)) / self.size

    def residuals(self, g: np.ndarray, rho: float) -> np.ndarray:
        """Full residual stack; squared norm = theta(g) + rho * |c(g)|^2."""
        data = (self.b - self.a @ g).T.reshape(-1) / np.sqrt(self.size)
        comm = self.commutator_vec(self.mult_mats(g))
        return np.concatenate([data, np.sqrt(rho) * comm])

    def jacobian(self, g: np.ndarray, rho: float) -> np.ndarray:
        """Dense Jacobian of ``residuals``; intended for small problems."""
        data = -np.kron(np.eye(self.m), self.a) / np.sqrt(self.size)
        comm = np.sqrt(rho) * self.commutator_jacobian(self.mult_mats(g))
        return np.vstack([data, comm])

    # -- normal-equation pieces used by the solver -------------------------

    def gram_and_gradient(self, g: np.ndarray, rho: float):
        """(J^T J, J^T r, phi) without materializing the data block."""
        mats = self.mult_mats(g)
        cvec = self.commutator_vec(mats)
        jc = self.commutator_jacobian(mats)
        jtj = np.kron(np.eye(self.m), self.ata) + rho * (jc.T @ jc)
        jtr = (self.ata @ g - self.atb).T.reshape(-1) + rho * (jc.T @ cvec)
        phi = self.theta(g) + rho * float(cvec @ cvec)
        return jtj, jtr, phi

    def penalized_value(self, g: np.ndarray, rho: float) -> float:
        cvec = self.commutator_vec(self.mult_mats(g))
        return self.theta(g) + rho * float(cvec @ cvec)

    def commutator_norm(self, g: np.ndarray) -> float:
        return float(np.linalg.norm(self.commutator_vec(self.mult_mats(g))))


def _lm_round(model: PenaltyModel, g: np.ndarray, rho: float, opts: FitOptions):
    """One Levenberg-Marquardt descent on the rho-penalized residuals."""
    k, m = model.k, model.m
    g = g.copy()
    jtj, jtr, phi = model.gram_and_gradient(g, rho)
    mu = 1e-3 * float(np.max(np.diag(jtj)))
    nu = 2.0
    iterations = 0
    for _ in range(opts.max_inner_iterations):
        if float(np.max(np.abs(jtr))) <= opts.gradient_tol:
            break
        iterations += 1
        try:
            delta = np.linalg.solve(jtj + mu * np.eye(k * m), -jtr)
        except np.linalg.LinAlgError:
            mu *= nu
            nu *= 2.0
            continue
        gnorm = float(np.linalg.norm(g))
        if float(np.linalg.norm(delta)) <= opts.step_tol * (gnorm + opts.step_tol):
            break
        g_new = g + delta.reshape(m, k).T
        phi_new = model.penalized_value(g_new, rho)
        predicted = -(2.0 * float(jtr @ delta) + float(delta @ (jtj @ delta)))
        actual = phi - phi_new
        if predicted <= 0.0 or actual <= 0.0:
            mu *= nu
            nu *= 2.0
            if mu > 1e32:
                break
            continue
        gain = actual / predicted
        g = g_new
        phi = phi_new
        jtj, jtr, _ = model.gram_and_gradient(g, rho)
        mu *= max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0) ** 3)
        nu = 2.0
        if actual <= opts.decrease_tol * (abs(phi) + opts.decrease_tol):
            break
    return g, iterations


def fit_generating_matrix(
    samples: SampleSet, k: int, opts: FitOptions | None = None
) -> FitResult:
    """Fit a k-zero generating system to noisy samples.

    Starts from the unconstrained least-squares minimizer of theta and
    drives the commutator norm below the feasibility target by penalized
    Gauss-Newton rounds.  When the round budget runs out first, the best
    iterate is returned with ``converged=False`` rather than raising.
    """
    opts = opts or FitOptions()
    model = PenaltyModel(samples, k)
    h = 2.0 * model.ata
    h = 0.5 * (h + h.T)
    h_min_eig = min_eigenvalue_sym(h)

    _, _, rank, _ = scipy.linalg.lstsq(model.a, model.b)
    if rank < k:
        raise DegenerateConfigurationError(
            f"sample moment matrix is rank deficient (rank {rank} < {k}, "
            f"min eigenvalue {h_min_eig:.3e})",
            condition=float("inf"),
        )
    warnings: list[str] = []
    if h_min_eig <= 1e-12:
        warnings.append(
            f"moment matrix is barely positive (min eigenvalue {h_min_eig:.3e})"
        )

    g = np.linalg.solve(model.ata, model.atb)
    theta_init = model.theta(g)

    rho = opts.rho0
    total_iterations = 0
    rounds = 0
    converged = False
    for _ in range(opts.max_rounds):
        com = model.commutator_norm(g)
        target = opts.feasibility_factor * (1.0 + float(np.linalg.norm(g)))
        if com <= target:
            converged = True
            break
        rounds += 1
        g, iters = _lm_round(model, g, rho, opts)
        total_iterations += iters
        rho *= opts.rho_growth
    com = model.commutator_norm(g)
    if not converged:
        converged = com <= opts.feasibility_factor * (1.0 + float(np.linalg.norm(g)))
    gm = model.matrix(np.ascontiguousarray(g))
    return FitResult(
        g_star=gm,
        objective=model.theta(g),
        commutator_norm=com,
        h_min_eig=h_min_eig,
        iterations=total_iterations,
        rounds=rounds,
        converged=converged,
        theta_init=theta_init,
        warnings=tuple(warnings),
    )
