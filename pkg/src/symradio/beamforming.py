"""Receive beamformers for the primary link.

Three strategies: matched filter to the direct link (MRC), the dominant
eigenvector of the equivalent-channel correlation matrix, and the
semidefinite relaxation of the closed-form rate maximization (SDR).
All returned beams are unit norm with the phase fixed so that
``wd^H hd`` is real and non-negative.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import sdp
from .channel import BdSymbolModel
from .numerics import LOG2E, NumericError, ValidationError, expint_Ei, herm_eig
from .rates import DegenerateBeamError

XI_GRID_POINTS = 64
XI_GRID_DECADES = 2.0
XI_ZOOM_POINTS = 16
XI_MAX_EXTENSIONS = 6
N_RANDOMIZATIONS = 200


class BeamMethod(str, enum.Enum):
    MRC = "MRC"
    CORRELATION_EIG = "CorrelationEig"
    SDR = "SDR"


class SolverError(RuntimeError):
    """No grid point of the SDR search produced an optimal SDP solution."""


@dataclass
class BeamformerResult:
    wd: np.ndarray
    method: BeamMethod
    objective: float
    diagnostics: dict = field(default_factory=dict)


def _fix_phase(w, ref):
    w = np.asarray(w, dtype=complex)
    w = w / np.linalg.norm(w)
    ip = np.vdot(w, ref)
    if abs(ip) > 0:
        w = w * (ip / abs(ip))
    return w


def mrc_beamformer(hd):
    hd = np.asarray(hd, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(hd)
    if nrm == 0:
        raise DegenerateBeamError("direct-link channel is zero")
    wd = hd / nrm
    return BeamformerResult(wd, BeamMethod.MRC, float(nrm ** 2))


def correlation_matrix(real, params):
    """``hd hd^H + alpha sum_j |h_j|^2 g_j g_j^H``.

    This is the second moment of the equivalent channel for any BD symbol
    law with zero mean, unit power and independence across BDs.
    """
    R = np.outer(real.hd, real.hd.conj())
    if real.J:
        R = R + params.alpha * (real.g.T * np.abs(real.h) ** 2) @ real.g.conj()
    return 0.5 * (R + R.conj().T)


def corr_eig_beamformer(real, params):
    """Dominant eigenvector of the correlation matrix (Jensen-bound optimum)."""
    R = correlation_matrix(real, params)
    if not np.any(R):
        raise DegenerateBeamError("correlation matrix is zero")
    lam, V = herm_eig(R, tol=1e-9)
    wd = _fix_phase(V[:, -1], real.hd)
    diag = {"eigenvalues": lam.tolist()}
    if real.J == 0:
        diag["note"] = "J=0: coincides with MRC"
    return BeamformerResult(wd, BeamMethod.CORRELATION_EIG, float(lam[-1]), diag)


def jensen_upper_bound(wd, corr, params):
    wd = np.asarray(wd, dtype=complex)
    if abs(np.linalg.norm(wd) - 1.0) > 1e-9:
        raise ValidationError("beamformer must have unit norm")
    q = np.real(np.vdot(wd, corr @ wd))
    return math.log2(1.0 + params.p * q / params.sigma2)


def snr_matrices(real, params):
    """Direct and aggregate-backscatter SNR matrices ``H_d / sigma2`` and ``sum_j H_j / sigma2``."""
    Hd = params.p * np.outer(real.hd, real.hd.conj()) / params.sigma2
    HB = params.p * params.alpha * (real.g.T * np.abs(real.h) ** 2) @ real.g.conj() / params.sigma2
    return 0.5 * (Hd + Hd.conj().T), 0.5 * (HB + HB.conj().T)


def closed_form_objective(w, Hd, HB):
    """Closed-form primary rate ``log2(w^H Hd w) - Ei(-ratio) log2 e`` of a beam."""
    lam = float(np.real(np.vdot(w, Hd @ w)))
    two_sigma = float(np.real(np.vdot(w, HB @ w)))
    if lam <= 0:
        return -math.inf
    if two_sigma <= 0:
        return math.log2(lam)
    return math.log2(lam) - expint_Ei(-lam / two_sigma) * LOG2E


def beam_rate(wd, real, params):
    Hd, HB = snr_matrices(real, params)
    return closed_form_objective(np.asarray(wd, dtype=complex), Hd, HB)


class _XiSearch:
    """Fixed-ratio SDP subproblems on normalized SNR matrices."""

    def __init__(self, Hd, HB):
        self.scale = float(np.linalg.norm(Hd))
        self.Hd = Hd / self.scale
        self.HB = HB / self.scale
        self.cache = {}
        self.skipped = []
        self.solves = 0

    def solve(self, xi):
        if xi in self.cache:
            return self.cache[xi]
        D = self.Hd - xi * self.HB
        problem = sdp.SdpProblem.unit_trace(self.Hd, [(D, 0.0)])
        sol = sdp.solve(problem)
        self.solves += 1
        if sol.status is sdp.SdpStatus.OPTIMAL and sol.objective_value > 0:
            value = math.log2(sol.objective_value * self.scale) - expint_Ei(-xi) * LOG2E
        else:
            value = -math.inf
            self.skipped.append((float(xi), sol.status.value))
        self.cache[xi] = (value, sol, problem)
        return self.cache[xi]


def sdr_beamformer(real, params, n_grid=XI_GRID_POINTS, n_zoom=XI_ZOOM_POINTS,
                   n_randomizations=N_RANDOMIZATIONS, seed=0, refine=True):
    """Closed-form-rate beamformer via ratio search over relaxed SDPs.

    For each ratio ``xi`` on a log grid around the MRC operating point the
    relaxed problem ``max Tr(W Hd)`` s.t. ``Tr W = 1``,
    ``Tr(W (Hd - xi HB)) = 0`` is solved. The grid also holds the ratio of
    the correlation-matrix beam and is widened decade by decade while its
    best point sits on an edge; the best ratio is then zoomed and polished
    with a bounded scalar search. A beam is recovered from the
    optimal ``W`` by rank-one purification and Gaussian randomization, and
    the reported objective is the closed-form rate of that beam.
    """
    if params.bd_symbol_model is not BdSymbolModel.CSCG:
        raise ValidationError("the SDR beamformer assumes CSCG BD symbols")
    mrc = mrc_beamformer(real.hd)
    Hd, HB = snr_matrices(real, params)
    if real.J == 0 or not np.any(HB):
        obj = closed_form_objective(mrc.wd, Hd, HB)
        return BeamformerResult(mrc.wd, BeamMethod.SDR, obj,
                                {"note": "no backscatter paths: returning MRC"})

    search = _XiSearch(Hd, HB)
    w0 = mrc.wd
    xi_mrc = np.real(np.vdot(w0, Hd @ w0)) / np.real(np.vdot(w0, HB @ w0))
    we = corr_eig_beamformer(real, params).wd
    xi_eig = np.real(np.vdot(we, Hd @ we)) / np.real(np.vdot(we, HB @ we))
    grid = np.unique(np.append(
        xi_mrc * np.logspace(-XI_GRID_DECADES, XI_GRID_DECADES, n_grid), [xi_mrc, xi_eig]))
    values = np.array([search.solve(x)[0] for x in grid])
    if not np.any(np.isfinite(values)):
        raise SolverError("every xi grid point was infeasible or failed")
    # widen by one decade at a time while the maximizer sits on an edge of the grid
    per_decade = max(2, int(round(n_grid / (2 * XI_GRID_DECADES))))
    extensions = 0
    while extensions < XI_MAX_EXTENSIONS:
        k = int(np.argmax(values))
        if k == 0:
            new = grid[0] * np.logspace(-1, 0, per_decade + 1)[:-1]
        elif k == grid.size - 1 and np.isfinite(values[-1]):
            new = grid[-1] * np.logspace(0, 1, per_decade + 1)[1:]
        else:
            break
        grid = np.concatenate([grid, new])
        values = np.concatenate([values, [search.solve(x)[0] for x in new]])
        order = np.argsort(grid)
        grid, values = grid[order], values[order]
        extensions += 1
    k = int(np.argmax(values))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    zoom = np.logspace(np.log10(lo), np.log10(hi), n_zoom)
    zvals = np.array([search.solve(x)[0] for x in zoom])
    candidates = list(zip(values, grid)) + list(zip(zvals, zoom))
    best_val, best_xi = max(candidates, key=lambda t: t[0])

    if refine:
        # finite neighbours bracket the local maximum in log(xi)
        feas = sorted(x for v, x in candidates if np.isfinite(v))
        idx = feas.index(best_xi)
        a = math.log(feas[max(idx - 1, 0)])
        b = math.log(feas[min(idx + 1, len(feas) - 1)])
        if b > a:
            res = minimize_scalar(lambda t: -search.solve(math.exp(t))[0], bounds=(a, b),
                                  method="bounded", options={"xatol": 1e-7})
            xr = math.exp(res.x)
            vr = search.solve(xr)[0]
            if vr > best_val:
                best_val, best_xi = vr, xr

    _, sol, problem = search.solve(best_xi)
    W = sol.W
    eig_w = np.linalg.eigvalsh(W)
    ratio = eig_w[-1] / max(eig_w[-2], 1e-300) if eig_w.size > 1 else math.inf
    score = lambda w: closed_form_objective(w, Hd, HB)

    mats = [A for A, _ in problem.equalities] + [problem.objective]
    cands = []
    try:
        cands.append(("purified", sdp.rank_one_reduce(W, mats)))
    except NumericError:
        pass
    cands.append(("randomized", sdp.extract_rank1(W, n_randomizations, score, seed)))
    scored = [(score(w), -i, name, w) for i, (name, w) in enumerate(cands)]
    obj, _, winner, wd = max(scored, key=lambda t: (t[0], t[1]))
    wd = _fix_phase(wd, real.hd)
    obj = score(wd)
    rand_obj = scored[-1][0]

    diag = {
        "xi_star": float(best_xi),
        "xi_mrc": float(xi_mrc),
        "grid_extensions": extensions,
        "sdp_bound": float(best_val),
        "eig_ratio": float(ratio),
        "randomization_objective": float(rand_obj),
        "winner": winner,
        "sdp_solves": search.solves,
        "skipped": list(search.skipped),
        "sdp_iterations": sol.iterations,
    }
    return BeamformerResult(wd, BeamMethod.SDR, float(obj), diag)


def beamformer(method, real, params, **kw):
    method = BeamMethod(method)
    if method is BeamMethod.MRC:
        return mrc_beamformer(real.hd)
    if method is BeamMethod.CORRELATION_EIG:
        return corr_eig_beamformer(real, params)
    return sdr_beamformer(real, params, **kw)
