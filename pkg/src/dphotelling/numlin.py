"""Dense symmetric linear algebra kernels.

Everything here operates on small dense symmetric matrices (d up to a few
hundred) represented as plain numpy arrays. All functions are pure and
deterministic: the eigensolver is a cyclic Jacobi iteration with a fixed
sweep order and a fixed eigenvector sign convention, so identical inputs
give bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, SingularMatrixError

# Relative symmetry slack: |a_ij - a_ji| <= SYMMETRY_TOL * (1 + max|a|).
SYMMETRY_TOL = 1e-12

_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100


def as_symmetric(a, *, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Validate that ``a`` is a square symmetric matrix and return it as float64.

    Raises ValueError if the matrix is not square or the symmetry defect
    exceeds ``tol * (1 + max|entry|)``.
    """
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValueError("matrix dimension must be >= 1")
    scale = 1.0 + (np.max(np.abs(m)) if m.size else 0.0)
    defect = np.max(np.abs(m - m.T))
    if defect > tol * scale:
        raise ValueError(f"matrix is not symmetric: max asymmetry {defect:.3e}")
    return m


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral decomposition A = V diag(w) V^T.

    ``eigenvalues`` are sorted in non-increasing order; column k of
    ``eigenvectors`` belongs to eigenvalue k. Each eigenvector has its
    first nonzero component positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _off_diagonal_norm(a: np.ndarray) -> float:
    # Computed on a zero-diagonal copy: subtracting sum(diag^2) from
    # sum(a^2) cancels catastrophically once the matrix is nearly diagonal.
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def jacobi_eigen(a, *, tol: float = _JACOBI_TOL,
                 max_sweeps: int = _JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run over (p, q) pairs in row-major order until the off-diagonal
    Frobenius norm drops below ``tol * (1 + ||A||_F)``; the tolerance is
    relative so large-norm inputs converge too. Raises ConvergenceError
    (naming the residual) if ``max_sweeps`` is exhausted.
    """
    a = as_symmetric(a).copy()
    a = 0.5 * (a + a.T)
    d = a.shape[0]
    v = np.eye(d)
    scale = 1.0 + float(np.linalg.norm(a))
    thresh = tol * scale
    # Entries below this cannot push the off-norm back above thresh.
    skip = thresh / max(1, d)

    converged = d == 1
    for _ in range(max_sweeps):
        if _off_diagonal_norm(a) <= thresh:
            converged = True
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                diff = a[q, q] - a[p, p]
                theta = diff / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (
                        abs(theta) + math.sqrt(1.0 + theta * theta)
                    )
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J on columns p, q then rows p, q.
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                v_p = v[:, p].copy()
                v_q = v[:, q].copy()
                v[:, p] = c * v_p - s * v_q
                v[:, q] = s * v_p + c * v_q
    else:
        converged = _off_diagonal_norm(a) <= thresh

    if not converged:
        raise ConvergenceError(
            f"Jacobi iteration did not converge in {max_sweeps} sweeps; "
            f"off-diagonal residual {_off_diagonal_norm(a):.3e}"
        )

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = v[:, order]

    # Sign convention: first component with magnitude > 1e-12 is positive.
    for k in range(d):
        col = vectors[:, k]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        lead = nz[0] if nz.size else 0
        if col[lead] < 0.0:
            vectors[:, k] = -col

    eigenvalues.setflags(write=False)
    vectors.setflags(write=False)
    return EigenDecomposition(eigenvalues=eigenvalues, eigenvectors=vectors)


def inverse_sqrt_psd(a, floor: float = 1e-12) -> np.ndarray:
    """Inverse symmetric square root of a PSD matrix with eigenvalue floor.

    Returns V diag(max(w, floor))^(-1/2) V^T. Tiny negative eigenvalues
    from round-off are tolerated; with ``floor == 0`` a non-positive
    eigenvalue raises SingularMatrixError instead of being clamped.
    """
    if floor < 0.0:
        raise ValueError("floor must be nonnegative")
    a = as_symmetric(a)
    dec = jacobi_eigen(a)
    w = dec.eigenvalues
    tol = 1e-10 * max(1.0, float(np.linalg.norm(a)))
    if w[-1] < -tol:
        raise ValueError(
            f"matrix is not PSD within tolerance: min eigenvalue {w[-1]:.3e}"
        )
    if floor == 0.0 and w[-1] <= 0.0:
        raise SingularMatrixError(
            f"singular matrix: min eigenvalue {w[-1]:.3e} with zero floor"
        )
    clamped = np.maximum(w, floor)
    v = dec.eigenvectors
    out = (v * (1.0 / np.sqrt(clamped))) @ v.T
    return 0.5 * (out + out.T)


def psd_sqrt(a) -> np.ndarray:
    """Symmetric PSD square root; negative round-off eigenvalues clamp to 0."""
    a = as_symmetric(a)
    dec = jacobi_eigen(a)
    w = np.maximum(dec.eigenvalues, 0.0)
    v = dec.eigenvectors
    out = (v * np.sqrt(w)) @ v.T
    return 0.5 * (out + out.T)


def orthonormal_complement(vectors) -> np.ndarray:
    """Orthonormal basis of the complement of k orthonormal d-vectors.

    ``vectors`` is a (k, d) array (use ``np.empty((0, d))`` for k = 0) or a
    sequence of d-vectors. Returns a (d-k, d) matrix with orthonormal rows,
    each orthogonal to every input vector. Deterministic: Gram-Schmidt over
    the canonical basis e_1, ..., e_d, skipping near-dependent candidates.
    """
    v = np.asarray(vectors, dtype=float)
    if v.ndim == 1:
        v = v[None, :]
    if v.ndim != 2:
        raise ValueError("expected a (k, d) array of row vectors")
    k, d = v.shape
    if k >= d:
        raise ValueError(f"complement is empty: k={k} >= d={d}")
    if k:
        gram = v @ v.T
        if np.max(np.abs(gram - np.eye(k))) > 1e-8:
            raise ValueError("input vectors are not orthonormal to 1e-8")

    rows = []
    basis = v
    for j in range(d):
        if len(rows) == d - k:
            break
        cand = np.zeros(d)
        cand[j] = 1.0
        # Two projection passes for numerical orthogonality.
        for _ in range(2):
            cand = cand - basis.T @ (basis @ cand)
        norm = float(np.linalg.norm(cand))
        if norm <= 1e-8:
            continue
        cand /= norm
        rows.append(cand)
        basis = np.vstack([basis, cand])
    if len(rows) != d - k:
        raise ConvergenceError(
            f"could not complete orthonormal complement: found {len(rows)} "
            f"of {d - k} directions"
        )
    return np.array(rows)


def quadratic_form(x, a) -> float:
    """x^T A x for a symmetric matrix A."""
    x = np.asarray(x, dtype=float)
    a = as_symmetric(a)
    if x.ndim != 1 or x.shape[0] != a.shape[0]:
        raise ValueError(
            f"dimension mismatch: vector {x.shape} vs matrix {a.shape}"
        )
    return float(x @ a @ x)
