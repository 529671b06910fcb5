"""Dense symmetric linear algebra used by the solver, the walk and the oracles.

Matrices are plain ``numpy`` arrays. ``as_symmetric`` validates and mirrors
input so downstream code can rely on exact symmetry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EigenError, InvalidInput, NotPSD

TOL_EIG = 1e-9
TOL_PSD = 1e-9
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


@dataclass(frozen=True)
class SingularTriples:
    sigma: np.ndarray  # ascending
    left: np.ndarray  # columns p_i
    right: np.ndarray  # columns q_i

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.sigma) @ self.right.T


def as_symmetric(a, tol: float = 1e-12) -> np.ndarray:
    """Return ``a`` as a float array with entries mirrored from the upper triangle."""
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidInput(f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > tol * scale:
        raise InvalidInput("matrix is not symmetric")
    iu = np.triu_indices(a.shape[0], 1)
    a.T[iu] = a[iu]
    return a


def sym_eig(a, tol_eig: float = TOL_EIG) -> Spectrum:
    a = as_symmetric(a)
    try:
        lam, vec = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"eigendecomposition did not converge: {exc}") from exc
    spec = Spectrum(lam, vec)
    scale = max(1.0, float(np.abs(a).max()))
    resid = float(np.abs(spec.reconstruct() - a).max())
    orth = float(np.abs(vec.T @ vec - np.eye(a.shape[0])).max())
    if resid > tol_eig * scale * a.shape[0] or orth > tol_eig * a.shape[0]:
        raise EigenError("eigendecomposition residual too large", residual=max(resid, orth))
    return spec


def lambda_min(a) -> float:
    return float(np.linalg.eigvalsh(as_symmetric(a))[0])


def psd_factor(x, tol_psd: float = TOL_PSD) -> np.ndarray:
    """Factor a PSD matrix as ``x = U.T @ U``.

    Returns ``U`` with shape ``(k, n)``; column ``i`` is the vector ``u_i``.
    Slightly negative eigenvalues are clamped to zero and eigenvalues at
    rounding level (below ``1e-12`` of the largest) are dropped, so ``k`` is
    the numerical rank and null directions of ``x`` stay exactly null.
    """
    x = as_symmetric(x)
    lam, vec = np.linalg.eigh(x)
    floor = -tol_psd * (1.0 + float(np.abs(x).max()))
    if lam[0] < floor:
        raise NotPSD(f"lambda_min = {lam[0]:.3e} below {floor:.3e}", float(lam[0]))
    keep = lam > RANK_RTOL * max(float(lam[-1]), 0.0)
    u = np.sqrt(lam[keep])[:, None] * vec[:, keep].T
    if u.shape[0] == 0:
        u = np.zeros((1, x.shape[0]))
    return u


def gram(u: np.ndarray) -> np.ndarray:
    g = u.T @ u
    return 0.5 * (g + g.T)


def svd(m) -> SingularTriples:
    """Full singular value decomposition with singular values ascending.

    For an ``r x c`` matrix the right family has ``c`` vectors; when ``r < c``
    the missing singular values are reported as exact zeros, so every right
    singular vector has a partner value.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or not np.all(np.isfinite(m)):
        raise InvalidInput("svd expects a finite 2-d array")
    r, c = m.shape
    try:
        p, s, qt = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"svd did not converge: {exc}") from exc
    sigma = np.zeros(c)
    sigma[: len(s)] = s
    left = np.zeros((r, c))
    k = min(r, c)
    left[:, :k] = p[:, :k]
    order = np.argsort(sigma, kind="stable")
    return SingularTriples(sigma[order], left[:, order], qt.T[:, order])


def null_space(w: np.ndarray, n: int, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (``n x r``) of the orthogonal complement of the rows of ``w``."""
    w = np.asarray(w, dtype=float).reshape(-1, n)
    if w.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(w, full_matrices=True)
    rank = int(np.sum(s > rtol * max(1.0, s[0])))
    return vt[rank:].T.copy()
