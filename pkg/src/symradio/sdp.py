"""Small dense semidefinite programs with a Hermitian matrix variable.

Problem form::

    maximize    Tr(W C)
    subject to  Tr(W A_i) = b_i,   i = 1..m
                W >= 0  (Hermitian PSD)

The complex problem is mapped to a real symmetric one of twice the size
through ``[[Re H, -Im H], [Im H, Re H]]`` and solved with a primal-dual
interior point method applied to the homogeneous self-dual embedding, using
Nesterov-Todd scaling and a Mehrotra predictor-corrector step. The embedding
yields either an optimal pair or a Farkas certificate of infeasibility
without a phase-one problem.
"""

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import STREAM_RANDOMIZATION, cscg, make_rng
from .numerics import NumericError, ValidationError, as_hermitian

MAX_ITER = 200
STEP_FRACTION = 0.98

# stopping targets; the acceptance thresholds are looser (1e-8, 1e-8, 1e-7)
TARGET_RES = 1e-10
TARGET_GAP = 1e-10
ACCEPT_RES = 1e-8
ACCEPT_GAP = 1e-7
INFEAS_TOL = 1e-9


class SdpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"


class KktResiduals(NamedTuple):
    primal: float
    dual: float
    gap: float


@dataclass
class SdpProblem:
    objective: np.ndarray
    equalities: list

    def __post_init__(self):
        self.objective = as_hermitian(self.objective)
        eqs = []
        for A, b in self.equalities:
            A = as_hermitian(A)
            if A.shape != self.objective.shape:
                raise ValidationError("constraint matrices must match the objective dimension")
            eqs.append((A, float(b)))
        if not eqs:
            raise ValidationError("at least one equality constraint is required")
        self.equalities = eqs

    @property
    def dim(self):
        return self.objective.shape[0]

    @classmethod
    def unit_trace(cls, C, extra=()):
        """Problem with ``Tr(W) = 1`` followed by the ``extra`` (A, b) pairs."""
        n = np.asarray(C).shape[0]
        return cls(C, [(np.eye(n), 1.0), *extra])


@dataclass
class SdpSolution:
    W: np.ndarray
    objective_value: float
    duals: np.ndarray
    kkt_residuals: KktResiduals
    status: SdpStatus
    S: np.ndarray = None
    iterations: int = 0
    dual_bounds: list = field(default_factory=list)
    certificate: np.ndarray = None


def complex_to_real_embedding(H):
    """``[[Re H, -Im H], [Im H, Re H]]``; traces double, spectra duplicate."""
    H = np.asarray(H, dtype=complex)
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def real_to_complex(X):
    """Fold a real symmetric 2n x 2n matrix back to an n x n Hermitian one.

    This is the inverse of the embedding on structured matrices and the
    orthogonal projection onto that structure otherwise.
    """
    n = X.shape[0] // 2
    X11, X12 = X[:n, :n], X[:n, n:]
    X21, X22 = X[n:, :n], X[n:, n:]
    W = 0.5 * (X11 + X22) + 0.5j * (X21 - X12)
    return 0.5 * (W + W.conj().T)


def _sym(X):
    return 0.5 * (X + X.T)


def _max_step(X, dX):
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    Li = np.linalg.inv(L)
    lam_min = np.linalg.eigvalsh(_sym(Li @ dX @ Li.T))[0]
    return np.inf if lam_min >= 0 else -1.0 / lam_min


def _solve_real(C, A, b, max_iter=MAX_ITER):
    """HSD interior point for ``min <C,X> s.t. <A_k,X> = b_k, X >= 0``.

    Returns a dict with the scaled iterate, status and diagnostics.
    """
    m, n = A.shape[0], A.shape[1]
    Aop = lambda X: np.einsum("kij,ij->k", A, X)
    Aadj = lambda y: np.einsum("k,kij->ij", y, A)

    X = np.eye(n)
    S = np.eye(n)
    y = np.zeros(m)
    tau = kappa = 1.0
    nb, nc = np.linalg.norm(b), np.linalg.norm(C)
    bound_history = []
    status = SdpStatus.MAX_ITER
    best = None
    it = 0

    for it in range(max_iter + 1):
        F1 = Aop(X) - b * tau
        F2 = -Aadj(y) + C * tau - S
        F3 = b @ y - np.sum(C * X) - kappa
        mu = (np.sum(X * S) + tau * kappa) / (n + 1)

        x, yy, s = X / tau, y / tau, S / tau
        pres = np.linalg.norm(Aop(x) - b) / (1 + nb)
        dres = np.linalg.norm(C - Aadj(yy) - s) / (1 + nc)
        pobj, dobj = np.sum(C * x), b @ yy
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        bound_history.append(yy.copy())
        if pres <= ACCEPT_RES and dres <= ACCEPT_RES and gap <= ACCEPT_GAP:
            score = max(pres, dres, gap)
            if best is None or score <= best[0]:
                best = (score, x, yy, s, (pres, dres, gap), it)
            if pres <= TARGET_RES and dres <= TARGET_RES and gap <= TARGET_GAP:
                status = SdpStatus.OPTIMAL
                break

        by = b @ y
        if by > 0:
            lam_top = np.linalg.eigvalsh(_sym(Aadj(y / by)))[-1]
            if lam_top <= INFEAS_TOL and tau < 1e-3 * kappa:
                status = SdpStatus.INFEASIBLE
                return dict(status=status, certificate=y / by, iterations=it,
                            bounds=bound_history)
        if it == max_iter:
            break

        # NT scaling point: G^T S G = G^{-1} X G^{-T} = diag(lam)
        try:
            Lx = np.linalg.cholesky(X)
            Ls = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            break
        U, lam, Vt = np.linalg.svd(Ls.T @ Lx)
        G = Lx @ Vt.T / np.sqrt(lam)
        Gi = np.linalg.inv(G)
        Wm = G @ G.T
        WCW = Wm @ C @ Wm
        AW = np.einsum("ij,kjl,lm->kim", Wm, A, Wm)
        Mmat = np.einsum("kij,lij->kl", A, AW)
        a_wcw = Aop(WCW)
        lam_sum = lam[:, None] + lam[None, :]

        def direction(sigma, corr_X=None, corr_S=None, corr_tk=0.0):
            eta = 1.0 - sigma
            rhs = np.diag(sigma * mu - lam ** 2)
            if corr_X is not None:
                rhs = rhs - 0.5 * (corr_X @ corr_S + corr_S @ corr_X)
            Rt = 2.0 * rhs / lam_sum
            R = G @ Rt @ G.T
            r_tau = sigma * mu - tau * kappa - corr_tk
            S0 = eta * F2
            WS0W = Wm @ S0 @ Wm
            lhs = np.zeros((m + 1, m + 1))
            lhs[:m, :m] = Mmat
            lhs[:m, m] = -(a_wcw + b)
            lhs[m, :m] = b - a_wcw
            lhs[m, m] = np.sum(C * WCW) + kappa / tau
            rr = np.empty(m + 1)
            rr[:m] = -eta * F1 - Aop(R) + Aop(WS0W)
            rr[m] = -eta * F3 + np.sum(C * R) - np.sum(WCW * S0) + r_tau / tau
            # equilibrate; the system loses rank like mu^2 near the optimum
            dr = 1.0 / np.sqrt(np.max(np.abs(lhs), axis=1))
            dc = 1.0 / np.sqrt(np.max(np.abs(lhs), axis=0))
            sol = np.linalg.lstsq(lhs * dr[:, None] * dc, rr * dr, rcond=None)[0] * dc
            dy, dtau = sol[:m], sol[m]
            dS = _sym(-Aadj(dy) + C * dtau + S0)
            dX = _sym(R - Wm @ dS @ Wm)
            dkappa = (r_tau - kappa * dtau) / tau
            return dX, dy, dS, dtau, dkappa

        def step_length(dX, dS, dtau, dkappa):
            amax = min(_max_step(X, dX), _max_step(S, dS))
            if dtau < 0:
                amax = min(amax, -tau / dtau)
            if dkappa < 0:
                amax = min(amax, -kappa / dkappa)
            return min(1.0, STEP_FRACTION * amax)

        try:
            pX, py, pS, ptau, pkappa = direction(0.0)
            a_aff = step_length(pX, pS, ptau, pkappa)
            mu_aff = (np.sum((X + a_aff * pX) * (S + a_aff * pS))
                      + (tau + a_aff * ptau) * (kappa + a_aff * pkappa)) / (n + 1)
            sigma = min(1.0, (mu_aff / mu) ** 3)
            cX = Gi @ pX @ Gi.T
            cS = G.T @ pS @ G
            dX, dy, dS, dtau, dkappa = direction(sigma, cX, cS, ptau * pkappa)
        except np.linalg.LinAlgError:
            break
        alpha = step_length(dX, dS, dtau, dkappa)
        if alpha < 1e-12:
            break
        X = _sym(X + alpha * dX)
        S = _sym(S + alpha * dS)
        y = y + alpha * dy
        tau += alpha * dtau
        kappa += alpha * dkappa

    if status is not SdpStatus.OPTIMAL and best is not None:
        status = SdpStatus.OPTIMAL
    if best is None:
        x, yy, s = X / tau, y / tau, S / tau
        res = (pres, dres, gap)
    else:
        _, x, yy, s, res, _ = best
    return dict(status=status, X=x, y=yy, S=s, residuals=res, iterations=it,
                bounds=bound_history)


def _identity_index(problem):
    for k, (A, b) in enumerate(problem.equalities):
        d = A[0, 0].real
        if d > 0 and np.allclose(A, d * np.eye(problem.dim), atol=1e-14 * d):
            return k, d
    return None, None


def dual_bound(problem, u):
    """Upper bound on the optimum implied by multipliers ``u``.

    Requires a constraint proportional to the identity, whose multiplier is
    shifted until ``sum u_i A_i - C`` is PSD. Returns None without one.
    """
    k, d = _identity_index(problem)
    if k is None:
        return None
    slack = sum(ui * A for ui, (A, _) in zip(u, problem.equalities)) - problem.objective
    shift = max(0.0, -np.linalg.eigvalsh(slack)[0]) / d
    bvec = np.array([b for _, b in problem.equalities])
    return float(bvec @ u + shift * problem.equalities[k][1])


def solve(problem, max_iter=MAX_ITER):
    """Solve an :class:`SdpProblem`, returning an :class:`SdpSolution`.

    Raises
    ------
    NumericError
        If the constraints are linearly dependent.
    """
    C = problem.objective
    c_scale = np.linalg.norm(C) or 1.0
    a_scales = np.array([np.linalg.norm(A) for A, _ in problem.equalities])
    if np.any(a_scales == 0):
        raise ValidationError("zero constraint matrix")
    A_real = np.stack([complex_to_real_embedding(A / s) / 2.0
                       for (A, _), s in zip(problem.equalities, a_scales)])
    b = np.array([bb for _, bb in problem.equalities]) / a_scales
    gram = np.einsum("kij,lij->kl", A_real, A_real)
    if np.linalg.matrix_rank(gram, tol=1e-10 * np.max(np.abs(gram))) < len(b):
        raise NumericError("equality constraints are linearly dependent")
    C_real = -complex_to_real_embedding(C / c_scale) / 2.0

    out = _solve_real(C_real, A_real, b, max_iter=max_iter)
    n = problem.dim
    # multipliers of the complex max problem: sum u_i A_i - C >= 0
    to_u = lambda yy: -np.asarray(yy) * c_scale / a_scales
    bounds = []
    for yy in out["bounds"]:
        bnd = dual_bound(problem, to_u(yy))
        if bnd is not None:
            bounds.append(bnd)

    if out["status"] is SdpStatus.INFEASIBLE:
        return SdpSolution(
            W=np.zeros((n, n), dtype=complex), objective_value=np.nan,
            duals=np.full(len(b), np.nan), kkt_residuals=KktResiduals(np.nan, np.nan, np.nan),
            status=SdpStatus.INFEASIBLE, iterations=out["iterations"],
            dual_bounds=bounds, certificate=to_u(out["certificate"]),
        )

    W = real_to_complex(out["X"])
    u = to_u(out["y"])
    status = out["status"]
    if status is SdpStatus.OPTIMAL:
        polished = _polish_rank1(problem, W, u)
        if polished is not None:
            W, u = polished
    S_c = _slack(problem, u)
    return SdpSolution(
        W=W, objective_value=float(np.real(np.sum(W * C.conj()))), duals=u,
        kkt_residuals=kkt_residuals(problem, W, u), status=status, S=S_c,
        iterations=out["iterations"], dual_bounds=bounds,
    )


def _slack(problem, u):
    S = sum(ui * A for ui, (A, _) in zip(u, problem.equalities)) - problem.objective
    return 0.5 * (S + S.conj().T)


def kkt_residuals(problem, W, u):
    """Normalized primal, dual and gap residuals of a candidate pair.

    Primal: constraint violation of ``W`` (plus any negative eigenvalue);
    dual: negative part of the slack ``sum u_i A_i - C``; gap: relative
    difference between ``Tr(W C)`` and ``b^T u``.
    """
    C = problem.objective
    scales = np.array([np.linalg.norm(A) for A, _ in problem.equalities])
    b = np.array([bb for _, bb in problem.equalities])
    viol = np.array([np.real(np.sum(W * A.conj())) for A, _ in problem.equalities]) - b
    lam_w = np.linalg.eigvalsh(W)[0]
    primal = np.linalg.norm(viol / scales) / (1 + np.linalg.norm(b / scales))
    primal = max(primal, -lam_w)
    c_scale = np.linalg.norm(C) or 1.0
    lam_s = np.linalg.eigvalsh(_slack(problem, u))[0]
    dual = max(0.0, -lam_s) / c_scale / (1 + 1.0)
    pobj = float(np.real(np.sum(W * C.conj())))
    dobj = float(b @ u)
    gap = abs(pobj - dobj) / c_scale / (1 + abs(pobj / c_scale) + abs(dobj / c_scale))
    return KktResiduals(float(primal), float(dual), float(gap))


def _polish_rank1(problem, W, u, iters=8):
    """Newton refinement of a rank-one KKT point ``(w, u)``.

    Solves ``(sum u_i A_i - C) w = 0`` and ``w^H A_i w = b_i`` in real
    coordinates, starting from the rank-one reduction of the interior point
    iterate. Returns None unless the result is feasible, dual feasible and
    at least as good as the input.
    """
    C = problem.objective
    mats = [A for A, _ in problem.equalities]
    b = np.array([bb for _, bb in problem.equalities])
    try:
        w = rank_one_reduce(W, mats + [C])
    except NumericError:
        return None
    # rescale so the first constraint with nonzero b holds exactly
    for A, bb in problem.equalities:
        q = np.real(np.vdot(w, A @ w))
        if bb != 0 and q * bb > 0:
            w = w * np.sqrt(bb / q)
            break
    Ar = [complex_to_real_embedding(A) for A in mats]
    Cr = complex_to_real_embedding(C)
    x = np.concatenate([w.real, w.imag])
    uu = np.array(u, dtype=float)
    n2, m = x.size, len(b)

    def resid(x, uu):
        Sr = sum(ui * A for ui, A in zip(uu, Ar)) - Cr
        return Sr, np.concatenate([Sr @ x, [x @ A @ x - bb for A, bb in zip(Ar, b)]])

    Sr, F = resid(x, uu)
    fn = np.linalg.norm(F)
    for _ in range(iters):
        Jm = np.zeros((n2 + m, n2 + m))
        Jm[:n2, :n2] = Sr
        for k, A in enumerate(Ar):
            Jm[:n2, n2 + k] = A @ x
            Jm[n2 + k, :n2] = 2.0 * (A @ x)
        # min-norm step; the global phase of w is a null direction
        step = np.linalg.lstsq(Jm, -F, rcond=1e-7)[0]
        t = 1.0
        while t > 1e-4:
            xn, un = x + t * step[:n2], uu + t * step[n2:]
            Sn, Fn = resid(xn, un)
            if np.linalg.norm(Fn) < fn:
                break
            t *= 0.5
        else:
            break
        x, uu, Sr, F, fn = xn, un, Sn, Fn, np.linalg.norm(Fn)
    w = x[: n2 // 2] + 1j * x[n2 // 2:]
    Wp = np.outer(w, w.conj())
    old = kkt_residuals(problem, W, u)
    new = kkt_residuals(problem, Wp, uu)
    if max(new) > max(ACCEPT_RES * 1e-2, min(max(old), ACCEPT_RES)):
        return None
    if np.real(np.vdot(w, C @ w)) < np.real(np.sum(W * C.conj())) - 1e-9 * (np.linalg.norm(C) or 1.0):
        return None
    return Wp, uu


def top_eigvec(W):
    lam, V = np.linalg.eigh(as_hermitian(W, tol=1e-9))
    return V[:, -1], lam


def extract_rank1(W, n_draws, scorer, seed, stream=0):
    """Gaussian randomization: best unit vector by ``scorer``.

    Candidates are the top eigenvector of ``W`` (checked first, so it wins
    ties) followed by ``n_draws`` normalized samples from CN(0, W).
    """
    w0, lam = top_eigvec(W)
    if lam[-1] <= 0:
        raise NumericError("cannot extract a direction from a zero matrix")
    best_w, best_score = w0, scorer(w0)
    if n_draws:
        V = np.linalg.eigh(0.5 * (W + W.conj().T))[1]
        root = V * np.sqrt(np.clip(lam, 0.0, None))
        rng = make_rng(seed, STREAM_RANDOMIZATION, stream)
        Z = root @ cscg(rng, (W.shape[0], n_draws))
        norms = np.linalg.norm(Z, axis=0)
        for k in range(n_draws):
            if norms[k] == 0:
                continue
            w = Z[:, k] / norms[k]
            sc = scorer(w)
            if sc > best_score:
                best_w, best_score = w, sc
    return best_w


def _hermitian_basis(r):
    basis = []
    for i in range(r):
        E = np.zeros((r, r), dtype=complex)
        E[i, i] = 1.0
        basis.append(E)
    for i in range(r):
        for j in range(i + 1, r):
            E = np.zeros((r, r), dtype=complex)
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
            E = np.zeros((r, r), dtype=complex)
            E[i, j], E[j, i] = 1j, -1j
            basis.append(E)
    return basis


def rank_one_reduce(W, matrices, rel_tol=1e-9):
    """Purify a PSD ``W`` to rank one keeping every ``Tr(W A)`` fixed.

    Each pass moves ``W = B B^H`` to ``B (I - U / lam_max(U)) B^H`` with a
    Hermitian ``U`` chosen in the null space of ``U -> Tr(B^H A B U)``,
    dropping the rank by at least one. Possible whenever ``rank^2`` exceeds
    the number of matrices, so two constraints plus the objective always
    reach rank one.
    """
    W = 0.5 * (W + W.conj().T)
    lam, V = np.linalg.eigh(W)
    keep = lam > rel_tol * max(lam[-1], 0.0)
    if lam[-1] <= 0:
        raise NumericError("cannot reduce a zero matrix")
    B = V[:, keep] * np.sqrt(lam[keep])
    while B.shape[1] > 1:
        r = B.shape[1]
        if r * r <= len(matrices):
            break
        basis = _hermitian_basis(r)
        rows = [[np.real(np.trace(B.conj().T @ A @ B @ E)) for E in basis] for A in matrices]
        _, _, vt = np.linalg.svd(np.array(rows), full_matrices=True)
        t = vt[-1]
        U = sum(ti * E for ti, E in zip(t, basis))
        mu = np.linalg.eigvalsh(U)
        if abs(mu[0]) > abs(mu[-1]):
            U, mu = -U, -mu[::-1]
        P = np.eye(r) - U / mu[-1]
        pl, pv = np.linalg.eigh(0.5 * (P + P.conj().T))
        pk = pl > 1e-12
        B = B @ (pv[:, pk] * np.sqrt(pl[pk]))
    w = B[:, np.argmax(np.linalg.norm(B, axis=0))]
    return w / np.linalg.norm(w)
