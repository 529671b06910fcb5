"""Universal vector colorings.

A universal vector coloring (UVC) for directions ``w_1..w_l`` and parameter
``beta`` is a PSD Gram matrix ``X`` with

* ``w_k^T X w_k = 0`` for every constraint,
* ``X <= (1/beta) diag(X)`` in the PSD order,
* ``X_ii <= 1``,
* ``tr(X) >= (1 - delta - beta) n`` where ``delta = l / n``.

Two solvers are provided. ``"spectral"`` builds ``X`` from the orthogonal
projection onto the complement of the constraints, peeling off any
direction that breaks the diagonal-domination inequality and then scaling
the diagonal up to one. It is exact by construction and fast. ``"ipm"``
maximizes the trace with an interior-point SDP solve (``cvxopt``) and also
returns a dual certificate. ``"auto"`` tries the spectral construction and
falls back to the interior point when the trace guarantee is missed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import InvalidInput, InvalidProblem, RefuseTooLarge, SolverStall

MAX_ORDER = 256


@dataclass
class UvcProblem:
    n: int
    constraints: np.ndarray
    beta: float

    def __post_init__(self):
        self.n = int(self.n)
        w = np.asarray(self.constraints, dtype=float)
        if w.size == 0:
            w = np.zeros((0, self.n))
        self.constraints = w.reshape(-1, self.n) if w.ndim != 2 else w
        self.beta = float(self.beta)
        if self.n < 1:
            raise InvalidProblem("n must be positive")
        if self.constraints.shape[1] != self.n:
            raise InvalidProblem("constraint length does not match n")
        if not np.all(np.isfinite(self.constraints)):
            raise InvalidProblem("constraints must be finite")
        if self.ell and np.any(np.abs(self.constraints).max(axis=1) == 0):
            raise InvalidProblem("constraint vectors must be nonzero")
        if self.ell >= self.n:
            raise InvalidProblem(f"need fewer constraints than elements ({self.ell} >= {self.n})")
        if not 0.0 < self.beta:
            raise InvalidProblem("beta must be positive")
        if self.beta + self.delta >= 1.0:
            raise InvalidProblem(f"beta + delta = {self.beta + self.delta:.4f} must be < 1")

    @property
    def ell(self) -> int:
        return int(self.constraints.shape[0])

    @property
    def delta(self) -> float:
        return self.ell / self.n

    @property
    def guarantee(self) -> float:
        return (1.0 - self.delta - self.beta) * self.n


@dataclass
class FeasibilityReport:
    max_constraint_residual: float
    lmi_min_eig: float
    max_diag: float
    trace_deficit: float
    random_direction_violation: float = 0.0
    psd_min_eig: float = 0.0

    def ok(self, p: UvcProblem, tol: float) -> bool:
        wmax = float(np.linalg.norm(p.constraints, axis=1).max()) if p.ell else 1.0
        return (
            self.max_constraint_residual <= tol * math.sqrt(p.n) * wmax
            and self.lmi_min_eig >= -tol
            and self.psd_min_eig >= -tol
            and self.max_diag <= 1.0 + tol
            and self.trace_deficit <= tol * p.n
            and self.random_direction_violation <= tol
        )

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


@dataclass
class DualCertificate:
    eta: np.ndarray
    g: np.ndarray
    q: np.ndarray

    @property
    def objective(self) -> float:
        return float(np.sum(self.q))


@dataclass
class VectorColoring:
    gram: np.ndarray
    vectors: np.ndarray  # (k, n); column i is u_i
    beta: float
    trace_value: float
    report: FeasibilityReport
    method: str = "spectral"
    dual: DualCertificate | None = None
    info: dict = field(default_factory=dict)


def _lmi_matrix(x: np.ndarray, beta: float) -> np.ndarray:
    return np.diag(np.diag(x)) / beta - x


def verify_uvc(v: VectorColoring | np.ndarray, p: UvcProblem, tol: float = 1e-9,
               seed: int = 0, directions: int = 100) -> FeasibilityReport:
    """Check the four UVC properties from the Gram matrix alone."""
    x = v.gram if isinstance(v, VectorColoring) else v
    x = numerics.as_symmetric(x, tol=1e-8)
    if x.shape[0] != p.n:
        raise InvalidInput(f"gram has order {x.shape[0]}, problem has n = {p.n}")
    psd_min = numerics.lambda_min(x)
    u = numerics.psd_factor(x, tol_psd=max(tol, 1e-12) * 1e6)
    if p.ell:
        resid = float(np.abs(np.einsum("ki,ij,kj->k", p.constraints, x, p.constraints)).max())
    else:
        resid = 0.0
    lmi = numerics.lambda_min(_lmi_matrix(x, p.beta))
    diag = np.diag(x)
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((directions, p.n))
    lhs = np.sum((b @ u.T) ** 2, axis=1)
    rhs = (b**2) @ np.sum(u**2, axis=0) / p.beta
    viol = float(np.max((lhs - rhs) / np.sum(b**2, axis=1)))
    return FeasibilityReport(
        max_constraint_residual=resid,
        lmi_min_eig=lmi,
        max_diag=float(diag.max()),
        trace_deficit=p.guarantee - float(diag.sum()),
        random_direction_violation=max(viol, 0.0),
        psd_min_eig=psd_min,
    )


def _spectral_gram(p: UvcProblem, margin: float = 1e-9) -> tuple[np.ndarray, int]:
    """Projection onto the constraint complement, peeled until diagonally dominated."""
    n, cap = p.n, 1.0 / p.beta
    rows = [p.constraints]
    peeled = 0
    for _ in range(n + 1):
        q = numerics.null_space(np.vstack(rows), n)
        if q.shape[1] == 0:
            return np.zeros((n, n)), peeled
        x = q @ q.T
        d = np.diag(x).copy()
        live = d > 1e-14 * max(1.0, d.max())
        x[~live, :] = 0.0
        x[:, ~live] = 0.0
        s = 1.0 / np.sqrt(d[live])
        c = x[np.ix_(live, live)] * s[:, None] * s[None, :]
        lam, vec = np.linalg.eigh(c)
        bad = lam > cap * (1.0 - margin)
        if not np.any(bad):
            return x, peeled
        extra = np.zeros((int(bad.sum()), n))
        extra[:, live] = (vec[:, bad] * s[:, None]).T
        rows.append(extra)
        peeled += int(bad.sum())
    raise SolverStall("spectral peeling did not settle")


def _scale_to_unit_diagonal(x: np.ndarray) -> np.ndarray:
    top = float(np.diag(x).max())
    return x / top if top > 0 else x


def _ipm_gram(p: UvcProblem) -> tuple[np.ndarray, DualCertificate, dict]:
    from cvxopt import matrix, solvers

    n, beta = p.n, p.beta
    q = numerics.null_space(p.constraints, n)
    r = q.shape[1]
    if r == 0:
        return np.zeros((n, n)), interior_certificate(p), {"status": "trivial"}
    iu = np.triu_indices(r)
    nv = len(iu[0])
    c = np.zeros(nv)
    g_y = np.zeros((r * r, nv))
    g_l = np.zeros((n * n, nv))
    g_d = np.zeros((n, nv))
    for k, (a, b) in enumerate(zip(*iu)):
        e = np.zeros((r, r))
        e[a, b] = e[b, a] = 1.0
        if a == b:
            c[k] = -1.0
        xe = q @ e @ q.T
        g_y[:, k] = -e.ravel()
        g_l[:, k] = (xe - np.diag(np.diag(xe)) / beta).ravel()
        g_d[:, k] = np.diag(xe)
    opts = {"show_progress": False, "abstol": 1e-10, "reltol": 1e-10, "feastol": 1e-10,
            "maxiters": 100}
    sol = solvers.sdp(matrix(c), Gl=matrix(g_d), hl=matrix(np.ones(n)),
                      Gs=[matrix(g_y), matrix(g_l)],
                      hs=[matrix(np.zeros((r, r))), matrix(np.zeros((n, n)))], options=opts)
    if sol["x"] is None:
        raise SolverStall(f"interior point failed with status {sol['status']}")
    y = np.zeros((r, r))
    y[iu] = np.array(sol["x"]).ravel()
    y = y + y.T - np.diag(np.diag(y))
    lam, vec = np.linalg.eigh(y)
    y = (vec * np.clip(lam, 0.0, None)) @ vec.T
    x = q @ y @ q.T
    x = _repair_lmi(0.5 * (x + x.T), beta)
    x = x / max(1.0, float(np.diag(x).max()))
    g = np.array(sol["zs"][1])
    qd = np.clip(np.array(sol["zl"]).ravel(), 0.0, None)
    cert = _certificate_from_duals(p, 0.5 * (g + g.T), qd, q)
    return x, cert, {"status": sol["status"], "iterations": sol["iterations"]}


def _repair_lmi(x: np.ndarray, beta: float, margin: float = 1e-9) -> np.ndarray:
    """Shrink eigenvalues of the normalized Gram above 1/beta.

    The normalized Gram shares the null vectors of ``x`` (rescaled), so the
    zero-discrepancy constraints survive the repair.
    """
    cap = (1.0 / beta) * (1.0 - margin)
    for _ in range(50):
        d = np.diag(x)
        live = d > 1e-14 * max(1.0, d.max())
        s = 1.0 / np.sqrt(d[live])
        c = x[np.ix_(live, live)] * s[:, None] * s[None, :]
        lam, vec = np.linalg.eigh(c)
        if lam[-1] <= cap:
            break
        c = (vec * np.minimum(lam, cap)) @ vec.T
        x = np.zeros_like(x)
        x[np.ix_(live, live)] = c / s[:, None] / s[None, :]
    return x


def _certificate_from_duals(p: UvcProblem, g: np.ndarray, q: np.ndarray,
                            basis_v: np.ndarray) -> DualCertificate:
    """Turn solver duals into a certificate for the dual program.

    The solver's multipliers make ``T = G - diag(G)/beta + Diag(q) - I`` PSD
    on the constraint complement up to solver accuracy. A small shift of ``q``
    makes that strict and a common multiplier ``eta`` on the constraints covers
    the remaining directions via a Schur complement.
    """
    n, beta = p.n, p.beta
    lam, vec = np.linalg.eigh(g)
    g = (vec * np.clip(lam, 0.0, None)) @ vec.T
    t = g - np.diag(np.diag(g)) / beta + np.diag(q) - np.eye(n)
    tvv = basis_v.T @ t @ basis_v
    shift = max(0.0, -float(np.linalg.eigvalsh(tvv)[0])) + 1e-7
    q = q + shift
    t = t + shift * np.eye(n)
    ell = p.ell
    if ell == 0 or basis_v.shape[1] == n:
        return DualCertificate(np.zeros(ell), g, q)
    _, s, vt = np.linalg.svd(p.constraints, full_matrices=True)
    rank = int(np.sum(s > 1e-10 * s[0]))
    bb = vt[:rank].T
    k = s[:rank] ** 2
    tvv = basis_v.T @ t @ basis_v
    tbv = bb.T @ t @ basis_v
    schur = tbv @ np.linalg.solve(tvv, tbv.T) - bb.T @ t @ bb
    ks = 1.0 / np.sqrt(k)
    rho = float(np.linalg.eigvalsh(ks[:, None] * schur * ks[None, :])[-1])
    eta_val = max(rho, 0.0) * 1.01 + 1e-6
    wwt = p.constraints.T @ p.constraints
    for _ in range(60):
        lhs = eta_val * wwt + t
        if np.linalg.eigvalsh(0.5 * (lhs + lhs.T))[0] >= 0.0:
            break
        eta_val *= 2.0
    return DualCertificate(np.full(ell, eta_val), g, q)


def interior_certificate(p: UvcProblem, eps: float = 1e-3) -> DualCertificate:
    """The strictly feasible dual point ``q_i = (1+eps)/beta``, ``G = I``, ``eta = 0``."""
    return DualCertificate(np.zeros(p.ell), np.eye(p.n), np.full(p.n, (1.0 + eps) / p.beta))


def solve_uvc(p: UvcProblem, tol: float = 1e-9, method: str = "auto") -> VectorColoring:
    if p.n > MAX_ORDER:
        raise RefuseTooLarge(f"UVC order {p.n} exceeds the guard {MAX_ORDER}")
    if method not in ("auto", "spectral", "ipm"):
        raise InvalidInput(f"unknown UVC method {method!r}")
    info: dict = {}
    dual = None
    if p.ell == 0:
        x, used = np.eye(p.n), "identity"
    elif method in ("auto", "spectral"):
        x, peeled = _spectral_gram(p)
        x, used = _scale_to_unit_diagonal(x), "spectral"
        info["peeled"] = peeled
    else:
        x, dual, info = _ipm_gram(p)
        used = "ipm"
    report = verify_uvc(x, p, tol)
    if not report.ok(p, tol) and method == "auto":
        x, dual, info = _ipm_gram(p)
        used = "ipm"
        report = verify_uvc(x, p, tol)
    if not report.ok(p, max(tol, 1e-7)):
        raise SolverStall(f"UVC solve ({used}) missed feasibility or the trace guarantee",
                          report=report)
    u = numerics.psd_factor(x, tol_psd=1e-7)
    return VectorColoring(gram=x, vectors=u, beta=p.beta, trace_value=float(np.trace(x)),
                          report=report, method=used, dual=dual, info=info)


def verify_dual_certificate(cert: DualCertificate, p: UvcProblem,
                            tol: float = 1e-9) -> tuple[bool, float]:
    eta = np.asarray(cert.eta, dtype=float).ravel()
    g = np.asarray(cert.g, dtype=float)
    q = np.asarray(cert.q, dtype=float).ravel()
    if eta.shape != (p.ell,) or g.shape != (p.n, p.n) or q.shape != (p.n,):
        raise InvalidInput("certificate dimensions do not match the problem")
    g = numerics.as_symmetric(g, tol=1e-8)
    lhs = (p.constraints.T * eta) @ p.constraints + g - np.diag(np.diag(g)) / p.beta + np.diag(q)
    lhs = 0.5 * (lhs + lhs.T)
    feasible = (
        numerics.lambda_min(lhs - np.eye(p.n)) >= -tol
        and numerics.lambda_min(g) >= -tol
        and float(q.min()) >= -tol
    )
    return bool(feasible), float(q.sum())


def low_distortion_subspace(m, beta: float, tol: float = 1e-9, maximal: bool = True) -> np.ndarray:
    """Subspace ``W`` with ``|My|^2 <= |y|^2 / beta`` for ``y`` in ``W``.

    Spanned by right singular vectors of ``m``. With ``maximal`` every
    direction with ``sigma^2 <= 1/beta`` is kept; otherwise exactly the
    ``ceil((1-beta) n)`` smallest ones.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise InvalidInput("expected a matrix")
    if not 0.0 < beta <= 1.0:
        raise InvalidInput("beta must lie in (0, 1]")
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms > 1.0 + 1e-12):
        raise InvalidInput("columns must have norm at most 1")
    n = m.shape[1]
    tri = numerics.svd(m)
    need = math.ceil((1.0 - beta) * n - 1e-12)
    if maximal:
        keep = max(need, int(np.sum(tri.sigma**2 <= 1.0 / beta + tol)))
    else:
        keep = need
    return tri.right[:, :keep]


def diag_dominated_subspace(g, beta: float, tol: float = 1e-9) -> np.ndarray:
    """Subspace ``W`` with ``w^T G w <= (1/beta) w^T diag(G) w`` on ``W``.

    Coordinates with zero diagonal contribute their unit vectors directly;
    on the rest the normalized Gram is split by eigenvalue.
    """
    g = numerics.as_symmetric(g, tol=1e-8)
    lam_min = numerics.lambda_min(g)
    if lam_min < -tol * (1.0 + float(np.abs(g).max())):
        from .errors import NotPSD

        raise NotPSD(f"G has lambda_min = {lam_min:.3e}", lam_min)
    n = g.shape[0]
    d = np.diag(g)
    live = d > tol
    cols = []
    if np.any(live):
        s = 1.0 / np.sqrt(d[live])
        c = g[np.ix_(live, live)] * s[:, None] * s[None, :]
        spec = numerics.sym_eig(c)
        need = math.ceil((1.0 - beta) * int(live.sum()) - 1e-12)
        keep = max(need, int(np.sum(spec.eigenvalues <= 1.0 / beta + tol)))
        sub = spec.eigenvectors[:, :keep] * s[:, None]
        block = np.zeros((n, keep))
        block[live] = sub
        cols.append(block)
    for i in np.flatnonzero(~live):
        e = np.zeros((n, 1))
        e[i] = 1.0
        cols.append(e)
    basis = np.hstack(cols)
    qmat, _ = np.linalg.qr(basis)
    return qmat
