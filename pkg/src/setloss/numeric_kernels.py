"""Dense linear-algebra kernels.

Thin wrappers around LAPACK-backed routines, with the conditioning checks
and deterministic orderings the rest of the package relies on.  Inputs are
small dense matrices; nothing here is tuned for scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateConfigurationError, NumericalFailureError

__all__ = [
    "ComplexSchurDecomposition",
    "solve_linear",
    "pseudo_inverse",
    "complex_schur",
    "min_eigenvalue_sym",
]

# relative singular-value cutoff below which a matrix is treated as singular
SINGULARITY_RTOL = 1e-10
# condition-estimate ceiling for square solves
CONDITION_LIMIT = 1e12


def solve_linear(a, b) -> np.ndarray:
    """Solve the square system a @ x = b via column-pivoted QR.

    ``b`` may be a vector or a matrix of stacked right-hand sides.  Raises
    DegenerateConfigurationError when the estimated condition number of
    ``a`` exceeds 1e12.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if not (np.iscomplexobj(a) or np.iscomplexobj(b)):
        a = a.astype(float, copy=False)
        b = b.astype(float, copy=False)
    q, r, piv = scipy.linalg.qr(a, pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.min() == 0.0:
        raise DegenerateConfigurationError("matrix is singular", condition=float("inf"))
    cond = float(diag.max() / diag.min())
    if cond > CONDITION_LIMIT:
        raise DegenerateConfigurationError("matrix is numerically singular", condition=cond)
    y = scipy.linalg.solve_triangular(r, q.conj().T @ b)
    x = np.empty_like(y)
    x[piv] = y
    return x


def pseudo_inverse(u) -> np.ndarray:
    """Moore-Penrose inverse of a tall full-column-rank matrix.

    ``u`` has shape (r, m) with m <= r.  Uses the SVD, so the result
    matches (u^T u)^(-1) u^T without forming the normal equations.  Rank
    deficiency (relative singular-value gap below 1e-10) raises
    DegenerateConfigurationError.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {u.shape}")
    rows, m = u.shape
    if m > rows:
        raise ValueError(f"expected at least as many rows as columns, got {u.shape}")
    if m == 0:
        return np.zeros((0, rows))
    w, s, vt = np.linalg.svd(u, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= SINGULARITY_RTOL * s[0]:
        cond = float("inf") if s[-1] == 0.0 else float(s[0] / s[-1])
        raise DegenerateConfigurationError("matrix is rank deficient", condition=cond)
    return (vt.T / s) @ w.T


@dataclass(frozen=True)
class ComplexSchurDecomposition:
    """Unitary q and upper-triangular p with q^H m q = p.

    Diagonal entries of p are the eigenvalues of the source matrix, sorted
    by real part and then by imaginary part, both ascending.
    """

    q: np.ndarray
    p: np.ndarray

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.diag(self.p)


def _swap_schur_block(p: np.ndarray, q: np.ndarray, i: int) -> None:
    # exchange the diagonal entries p[i,i] and p[i+1,i+1] by a unitary
    # similarity confined to rows/columns i, i+1
    a = p[i, i]
    b = p[i, i + 1]
    c = p[i + 1, i + 1]
    v = np.array([b, c - a], dtype=complex)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return
    v /= nv
    g = np.array([[v[0], -np.conj(v[1])], [v[1], np.conj(v[0])]])
    p[i : i + 2, :] = g.conj().T @ p[i : i + 2, :]
    p[:, i : i + 2] = p[:, i : i + 2] @ g
    q[:, i : i + 2] = q[:, i : i + 2] @ g
    p[i + 1, i] = 0.0


def complex_schur(m) -> ComplexSchurDecomposition:
    """Sorted complex Schur decomposition of a square matrix.

    Delegates the factorization to LAPACK and then reorders the diagonal
    into the (real, imaginary) ascending order with a bubble pass of
    unitary 2x2 swaps.  Raises NumericalFailureError when the backend does
    not converge or the reordered factors lose the decomposition
    invariants.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(np.asarray(m, dtype=complex).view(float))):
        raise ValueError("matrix entries must be finite")
    try:
        p, q = scipy.linalg.schur(np.asarray(m, dtype=complex), output="complex")
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare backend failure
        raise NumericalFailureError(f"Schur iteration failed: {exc}") from exc
    p = np.array(p, dtype=complex)
    q = np.array(q, dtype=complex)
    k = p.shape[0]

    def key(i):
        d = p[i, i]
        return (d.real, d.imag)

    swapped = True
    while swapped:
        swapped = False
        for i in range(k - 1):
            if key(i + 1) < key(i):
                _swap_schur_block(p, q, i)
                swapped = True

    scale = np.linalg.norm(np.asarray(m, dtype=complex))
    unitary_defect = np.linalg.norm(q.conj().T @ q - np.eye(k))
    triangular_defect = np.linalg.norm(np.tril(p, -1))
    rebuild_defect = np.linalg.norm(q @ p @ q.conj().T - m)
    if (
        unitary_defect > 1e-10 * max(k, 1)
        or triangular_defect > 1e-8 * max(np.linalg.norm(p), 1.0)
        or rebuild_defect > 1e-8 * max(scale, 1.0)
    ):
        raise NumericalFailureError(
            "Schur factors lost accuracy "
            f"(unitary {unitary_defect:.2e}, triangular {triangular_defect:.2e}, "
            f"rebuild {rebuild_defect:.2e})"
        )
    q.flags.writeable = False
    p.flags.writeable = False
    return ComplexSchurDecomposition(q=q, p=p)


def min_eigenvalue_sym(a) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    The input must be symmetric up to an absolute defect of
    1e-12 * max(1, |a|_max); anything else raises ValueError rather than
    being silently symmetrized.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    defect = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if defect > 1e-12 * scale:
        raise ValueError(f"matrix is not symmetric (defect {defect:.3e})")
    return float(np.linalg.eigvalsh(a)[0])
