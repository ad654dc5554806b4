"""
Dense complex linear algebra used by the alignment updates.

Every eigen-selection goes through :func:`eig_smallest` / :func:`eig_largest`
so the phase convention is applied in one place: each returned eigenvector
is rotated so that its largest-magnitude entry is real and positive (ties
broken by the lowest index). Inputs to the eigensolvers are symmetrized as
``(A + A^H) / 2`` before decomposition.

When the requested count cuts through a cluster of (numerically) equal
eigenvalues, the eigensolver's basis of that cluster is an accident of
rounding. The part taken from the cluster is then chosen canonically from
the cluster's projector, so the selected subspace depends only on the
input matrix up to round-off, and not on its scale.
"""

import numpy as np

# Module tolerances. Callers may override per call through ``tol=``.
HERMITIAN_TOL = 1e-10
ORTHONORMAL_TOL = 1e-10
# Eigenvalues closer than this (relative to the spectral norm) are tied.
TIE_TOL = 1e-12


class DimensionError(ValueError):
    """Raised when matrix shapes or requested subspace sizes are invalid."""


class NotHermitianError(ValueError):
    """Raised when an eigensolver input is not Hermitian."""


class NotPositiveDefiniteError(ValueError):
    """Raised by :func:`logdet2` for non positive-definite input."""


def _as_matrix(A, name="A"):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D matrix, "
                             f"got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return A


def _hermitian_part(A, tol):
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    scale = np.linalg.norm(A)
    asym = np.linalg.norm(A - A.conj().T)
    if asym > tol * max(scale, np.finfo(float).tiny):
        raise NotHermitianError(
            f"matrix is not Hermitian (relative asymmetry "
            f"{asym / scale:.3e} > {tol:.1e})")
    return 0.5 * (A + A.conj().T)


def fix_phase(V):
    """
    Rotate each column of `V` so its largest-magnitude entry is real > 0.

    Ties in magnitude are broken by the lowest row index (``np.argmax``
    returns the first maximum).
    """
    V = np.array(V, dtype=complex, copy=True)
    if V.shape[1] == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    pivots = V[idx, np.arange(V.shape[1])]
    mags = np.abs(pivots)
    phase = np.ones_like(pivots)
    nz = mags > 0
    phase[nz] = pivots[nz] / mags[nz]
    return V * phase.conj()[np.newaxis, :]


def eig_smallest(A, d, tol=HERMITIAN_TOL):
    """
    Eigenvectors of the `d` algebraically smallest eigenvalues.

    Parameters
    ----------
    A : ndarray, shape (n, n)
        Hermitian matrix.
    d : int
        Number of eigenvectors to return, ``1 <= d <= n``.

    Returns
    -------
    U : ndarray, shape (n, d)
        Orthonormal eigenvectors, phase-normalized.
    w : ndarray, shape (d,)
        The matching eigenvalues in ascending order.
    """
    A = _hermitian_part(A, tol)
    n = A.shape[0]
    if not 1 <= d <= n:
        raise DimensionError(f"need 1 <= d <= n, got d={d}, n={n}")
    w, V = np.linalg.eigh(A)
    return fix_phase(_select(w, V, d)), w[:d]


def eig_largest(A, m, tol=HERMITIAN_TOL):
    """
    Eigenvectors of the `m` largest eigenvalues, eigenvalues descending.

    Same contract as :func:`eig_smallest` otherwise.
    """
    A = _hermitian_part(A, tol)
    n = A.shape[0]
    if not 1 <= m <= n:
        raise DimensionError(f"need 1 <= m <= n, got m={m}, n={n}")
    w, V = np.linalg.eigh(A)
    w, V = w[::-1], V[:, ::-1]
    return fix_phase(_select(w, V, m)), w[:m]


def _select(w, V, d):
    """First `d` columns of `V` (eigenvalues `w` in preference order),
    with a tied cluster at the cut resolved canonically."""
    n = w.size
    if d == n:
        return V
    gap = TIE_TOL * max(np.max(np.abs(w)), np.finfo(float).tiny)
    if abs(w[d] - w[d - 1]) > gap:
        return V[:, :d]
    lo, hi = d - 1, d + 1
    while lo > 0 and abs(w[lo] - w[lo - 1]) <= gap:
        lo -= 1
    while hi < n and abs(w[hi] - w[hi - 1]) <= gap:
        hi += 1
    # Greedy pivoted Gram-Schmidt on the cluster projector's columns; the
    # projector is basis-free, and near-equal pivots go to the lowest index.
    Vc = V[:, lo:hi]
    R = Vc @ Vc.conj().T
    picked = []
    for _ in range(d - lo):
        norms = np.linalg.norm(R, axis=0)
        j = int(np.flatnonzero(norms >= (1 - 1e-6) * norms.max())[0])
        q = R[:, j] / norms[j]
        picked.append(q)
        R = R - np.outer(q, q.conj() @ R)
    return np.column_stack([V[:, :lo]] + picked)


def svd(A):
    """
    Full singular value decomposition ``A = Phi @ diag(sigma) @ Xi^H``.

    Returns
    -------
    Phi : ndarray, shape (p, p)
    sigma : ndarray, shape (min(p, q),)
        Non-negative, sorted in decreasing order.
    Xi : ndarray, shape (q, q)
        Right singular vectors as columns (not conjugate-transposed).
    """
    A = _as_matrix(A)
    Phi, sigma, XiH = np.linalg.svd(A, full_matrices=True)
    return Phi, sigma, XiH.conj().T


def orthonormal_complement(U):
    """Orthonormal basis of the orthogonal complement of ``span(U)``."""
    U = _as_matrix(U, "U")
    n, m = U.shape
    if m >= n:
        raise DimensionError(f"complement of an {n}x{m} basis is empty")
    Phi, _, _ = svd(U)
    return fix_phase(Phi[:, m:])


def projection_residual(A, U):
    """Squared Frobenius norm of the part of `A` outside ``span(U)``.

    Computes ``||A - U U^H A||_F^2``.
    """
    A = np.asarray(A)
    U = np.asarray(U)
    if A.shape[0] != U.shape[0]:
        raise DimensionError(f"row mismatch: A has {A.shape[0]}, "
                             f"U has {U.shape[0]}")
    R = A - U @ (U.conj().T @ A)
    return float(np.real(np.vdot(R, R)))


def logdet2(A, tol=HERMITIAN_TOL):
    """log2 of the determinant of a Hermitian positive-definite matrix."""
    A = _hermitian_part(A, tol)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") \
            from exc
    return float(2.0 * np.sum(np.log2(np.real(np.diag(L)))))


def is_orthonormal(U, tol=ORTHONORMAL_TOL):
    U = np.asarray(U)
    G = U.conj().T @ U
    return bool(np.linalg.norm(G - np.eye(U.shape[1])) <= tol)


def principal_angles(A, B):
    """
    Principal angles (radians, ascending) between ``span(A)`` and ``span(B)``.

    Uses the sines of the angles, which stay accurate for nearly equal
    subspaces where ``arccos`` of the cosines loses about half the digits.
    Both bases must have the same number of columns.
    """
    Qa, _ = np.linalg.qr(A)
    Qb, _ = np.linalg.qr(B)
    R = Qb - Qa @ (Qa.conj().T @ Qb)
    s = np.linalg.svd(R, compute_uv=False)
    return np.sort(np.arcsin(np.clip(s, 0.0, 1.0)))
