"""Achievable rates of the primary link and of the backscatter MAC.

Index conventions: BD indices are 0-based positions in ``real.h``; the
``rank`` argument of the SIC helpers is a 0-based position in
``real.sic_order`` (rank 0 is decoded first).
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import STREAM_NOISE, STREAM_SYMBOLS, BdSymbolModel, cscg, draw_bd_symbols, make_rng
from .numerics import LOG2E, ValidationError, bessel_I0e, expint_Ei, logdet_pd, solve_hermitian_pd

UNIT_TOL = 1e-9
MC_BLOCK = 1 << 16


class DegenerateBeamError(ValueError):
    """The receive beam is orthogonal to the direct link."""


class RateMethod(str, enum.Enum):
    MONTE_CARLO = "MonteCarlo"
    CLOSED_FORM = "ClosedForm"
    ASYMPTOTIC = "Asymptotic"


@dataclass
class RateReport:
    primary_rate_bps_hz: float
    secondary_sum_rate_bps_hz: float = 0.0
    lambda_: float = 0.0
    sigma_param: float = 0.0
    delta_rs: float = 0.0
    method: RateMethod = RateMethod.CLOSED_FORM
    flags: list = field(default_factory=list)


def _check_unit(wd):
    wd = np.asarray(wd, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(wd)
    if abs(nrm - 1.0) > UNIT_TOL:
        raise ValidationError(f"beamformer must have unit norm, got {nrm:.12g}")
    return wd


def equivalent_channel(real, c, alpha):
    """``hd + sum_j sqrt(alpha) h_j g_j c_j``; ``c`` may be (J,) or (T, J)."""
    c = np.asarray(c, dtype=complex)
    if c.shape[-1] != real.J:
        raise ValidationError(f"expected {real.J} BD symbols, got {c.shape[-1]}")
    return real.hd + math.sqrt(alpha) * (c * real.h) @ real.g


def primary_snr(wd, heq, params):
    wd = _check_unit(wd)
    heq = np.asarray(heq, dtype=complex)
    return params.p * np.abs(heq @ wd.conj()) ** 2 / params.sigma2


def beam_gains(wd, real, params):
    """Direct amplitude ``wd^H hd`` and BD amplitudes ``sqrt(alpha) h_j wd^H g_j``."""
    a = np.vdot(wd, real.hd)
    b = math.sqrt(params.alpha) * real.h * (real.g @ wd.conj())
    return a, b


@dataclass
class McEstimate:
    mean: float
    stderr: float
    n_trials: int


def primary_rate_mc(wd, real, params, n_trials=10_000, seed=0, stream=0):
    """Monte Carlo estimate of ``E_c[log2(1 + r_s(c))]`` with its standard error.

    With CSCG symbols the aggregate backscatter term ``sum_j b_j c_j`` is
    itself CN(0, sum |b_j|^2), so one scalar is drawn per trial; the
    unit-modulus model draws every symbol explicitly.
    """
    wd = _check_unit(wd)
    if n_trials < 1:
        raise ValidationError("n_trials must be >= 1")
    a, b = beam_gains(wd, real, params)
    snr_scale = params.p / params.sigma2
    var = float(np.sum(np.abs(b) ** 2))
    if real.J == 0 or var == 0.0:
        return McEstimate(float(np.log2(1.0 + snr_scale * abs(a) ** 2)), 0.0, n_trials)
    rng = make_rng(seed, STREAM_SYMBOLS, stream)
    total = 0.0
    total_sq = 0.0
    done = 0
    explicit = params.bd_symbol_model is BdSymbolModel.UNIT_MODULUS
    block = MC_BLOCK if not explicit else max(1, MC_BLOCK // max(real.J, 1))
    while done < n_trials:
        t = min(block, n_trials - done)
        if explicit:
            z = draw_bd_symbols(rng, (t, real.J), params.bd_symbol_model) @ b
        else:
            z = cscg(rng, t, var)
        r = np.log2(1.0 + snr_scale * np.abs(a + z) ** 2)
        total += r.sum()
        total_sq += (r * r).sum()
        done += t
    mean = total / n_trials
    if n_trials > 1:
        var_s = max(total_sq / n_trials - mean * mean, 0.0) * n_trials / (n_trials - 1)
        se = math.sqrt(var_s / n_trials)
    else:
        se = math.inf
    return McEstimate(float(mean), float(se), n_trials)


def primary_rate_mc_until(wd, real, params, target_se, seed=0, stream=0,
                          start=10_000, max_trials=10_000_000):
    """Double the trial count until the standard error drops below ``target_se``."""
    n = start
    while True:
        est = primary_rate_mc(wd, real, params, n, seed, stream)
        if est.stderr < target_se or n >= max_trials:
            return est
        n = min(2 * n, max_trials)


def snr_parameters(wd, real, params):
    """Non-centrality ``lambda`` and Gaussian variance ``Sigma`` of ``r_s``."""
    wd = _check_unit(wd)
    a, b = beam_gains(wd, real, params)
    scale = params.p / params.sigma2
    lam = float(scale * abs(a) ** 2)
    sig = scale * float(np.sum(np.abs(b) ** 2)) / 2.0
    return lam, sig


def closed_form_rate(lam, sigma_param):
    """``log2(lam) - Ei(-lam / 2 Sigma) log2 e`` and the gain term."""
    if not lam > 0:
        raise DegenerateBeamError("direct-link SNR is zero; beam orthogonal to hd")
    if sigma_param <= 0:
        return math.log2(lam), 0.0
    delta = -expint_Ei(-lam / (2.0 * sigma_param)) * LOG2E
    return math.log2(lam) + delta, delta


def primary_rate_closed(wd, real, params):
    """High-SNR semi-closed form of the expected primary rate (CSCG symbols)."""
    if params.bd_symbol_model is not BdSymbolModel.CSCG:
        raise ValidationError("the closed form assumes CSCG BD symbols")
    lam, sig = snr_parameters(wd, real, params)
    rate, delta = closed_form_rate(lam, sig)
    flags = [] if sig > 0 else ["sigma_zero_limit"]
    return RateReport(rate, 0.0, lam, sig, delta, RateMethod.CLOSED_FORM, flags)


def chi2_pdf(x, lam, sigma_param):
    """Density of ``r_s``: ``(1/2S) exp(-(x+lam)/2S) I0(sqrt(x lam)/S)``.

    Evaluated as ``exp(-(sqrt(x) - sqrt(lam))^2 / 2S) I0e(z) / 2S`` so large
    arguments do not overflow.
    """
    if not sigma_param > 0:
        raise ValidationError(f"sigma_param must be > 0, got {sigma_param}")
    if x < 0:
        return 0.0
    z = math.sqrt(x * lam) / sigma_param
    expo = -(math.sqrt(x) - math.sqrt(lam)) ** 2 / (2.0 * sigma_param)
    return math.exp(expo) * bessel_I0e(z) / (2.0 * sigma_param)


def _ordered(real):
    order = real.sic_order
    return real.h[order], real.g[order]


def _interference_plus_noise(real, params, rank):
    # Kp alpha sum_{i after rank} |h_i|^2 g_i g_i^H + sigma2 I
    h, g = _ordered(real)
    rest_h, rest_g = h[rank + 1:], g[rank + 1:]
    c = params.K * params.p * params.alpha
    R = c * (rest_g.T * np.abs(rest_h) ** 2) @ rest_g.conj()
    return R + params.sigma2 * np.eye(real.M)


def _check_rank(real, rank):
    if not 0 <= rank < real.J:
        raise ValidationError(f"SIC rank {rank} out of range for J={real.J}")


def mmse_sic_beamformer(real, params, rank):
    """Unnormalized MMSE-SIC combiner for the BD decoded at position ``rank``."""
    _check_rank(real, rank)
    h, g = _ordered(real)
    Q = _interference_plus_noise(real, params, rank)
    return solve_hermitian_pd(Q, math.sqrt(params.K * params.p * params.alpha) * h[rank] * g[rank])


def beamformer_sinr(w, real, params, rank):
    """SINR of an arbitrary combiner ``w`` at SIC position ``rank``."""
    _check_rank(real, rank)
    h, g = _ordered(real)
    w = np.asarray(w, dtype=complex)
    Q = _interference_plus_noise(real, params, rank)
    sig = params.K * params.p * params.alpha * abs(h[rank]) ** 2 * abs(np.vdot(w, g[rank])) ** 2
    den = np.real(np.vdot(w, Q @ w))
    return sig / den


def _sic_sinrs(real, params):
    J, M = real.J, real.M
    if J == 0:
        return np.zeros(0)
    h, g = _ordered(real)
    c = params.K * params.p * params.alpha / params.sigma2
    outer = (np.abs(h) ** 2)[:, None, None] * g[:, :, None] * g.conj()[:, None, :]
    # suffix sums: tail[j] = sum_{i > j} outer[i]
    tail = np.zeros((J, M, M), dtype=complex)
    if J > 1:
        tail[:-1] = np.cumsum(outer[::-1], axis=0)[::-1][1:]
    Q = np.eye(M) + c * tail
    x = np.linalg.solve(Q, g[:, :, None])[:, :, 0]
    return c * np.abs(h) ** 2 * np.real(np.sum(g.conj() * x, axis=1))


def sic_sinr(real, params, rank):
    """SINR of the BD at SIC position ``rank`` under its MMSE combiner."""
    _check_rank(real, rank)
    h, g = _ordered(real)
    Q = _interference_plus_noise(real, params, rank) / params.sigma2
    c = params.K * params.p * params.alpha / params.sigma2
    return float(c * abs(h[rank]) ** 2 * np.real(np.vdot(g[rank], solve_hermitian_pd(Q, g[rank]))))


def bd_sum_rate_sinr(real, params):
    """Secondary sum rate as ``(1/K) sum_j log2(1 + SINR_j)`` along the SIC chain."""
    return float(np.sum(np.log2(1.0 + _sic_sinrs(real, params))) / params.K)


def bd_sum_rate_logdet(real, params):
    """Secondary sum rate as ``(1/K) log2 det(I + (Kp alpha/sigma2) sum |h_j|^2 g_j g_j^H)``."""
    if real.J == 0:
        return 0.0
    c = params.K * params.p * params.alpha / params.sigma2
    G = (real.g.T * np.abs(real.h) ** 2) @ real.g.conj()
    return logdet_pd(np.eye(real.M) + c * G) / params.K


def bd_sum_rate_asymptotic(params):
    """Massive-BD limit ``(M/K) log2(1 + J K p alpha beta_h beta_g / sigma2)``."""
    if params.J < 1:
        raise ValidationError("the massive-BD limit needs J >= 1")
    snr = params.J * params.K * params.p * params.alpha * params.beta_h * params.beta_g / params.sigma2
    return params.M / params.K * math.log2(1.0 + snr)


def asymptotic_primary_from_gain(direct_gain, params):
    """Massive-BD primary rate for ``direct_gain = |wd^H hd|^2``."""
    if params.J < 1:
        raise ValidationError("the massive-BD limit needs J >= 1")
    if not direct_gain > 0:
        raise DegenerateBeamError("beam is orthogonal to the direct link")
    agg = params.J * params.alpha * params.beta_h * params.beta_g
    if agg == 0:
        return math.log2(params.p * direct_gain / params.sigma2)
    return (math.log2(params.p * direct_gain / params.sigma2)
            - expint_Ei(-direct_gain / agg) * LOG2E)


def primary_rate_asymptotic(wd, hd, params):
    wd = _check_unit(wd)
    return asymptotic_primary_from_gain(abs(np.vdot(wd, hd)) ** 2, params)


def rs_given_rbd(gamma, rbd, K, M):
    """Massive-BD primary rate expressed through the secondary sum rate."""
    if not gamma > 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    if rbd < 0:
        raise ValidationError(f"rbd must be >= 0, got {rbd}")
    if rbd == 0:
        return math.log2(gamma)
    denom = math.expm1(K / M * rbd * math.log(2.0))
    return math.log2(gamma) - expint_Ei(-K * gamma / denom) * LOG2E


@dataclass
class BdObservation:
    simulated: np.ndarray
    model: np.ndarray
    noise: np.ndarray
    s_norm2: float


def simulate_bd_observation(real, params, c, seed=0, stream=0, noise=True,
                            force_unit_power=False):
    """Waveform-level check of the matched-filtered BD observation.

    Generates the K-symbol block, removes the primary component, applies the
    temporal matched filter ``s* / ||s||`` and returns the result next to its
    large-K model ``sqrt(K p alpha) sum_j h_j g_j c_j + noise`` built from the
    same noise draw. ``force_unit_power`` rescales ``s`` to ``||s||^2 = K``.
    """
    c = np.asarray(c, dtype=complex).reshape(-1)
    if c.size != real.J:
        raise ValidationError(f"expected {real.J} BD symbols, got {c.size}")
    K, M = params.K, real.M
    rng = make_rng(seed, STREAM_NOISE, stream)
    s = cscg(rng, K)
    if force_unit_power:
        s = s * math.sqrt(K) / np.linalg.norm(s)
    Z = cscg(rng, (M, K), params.sigma2) if noise else np.zeros((M, K), dtype=complex)
    cascade = (c * real.h) @ real.g
    sp, sa = math.sqrt(params.p), math.sqrt(params.alpha)
    Y = sp * np.outer(real.hd, s) + sp * sa * np.outer(cascade, s) + Z
    Y_hat = Y - sp * np.outer(real.hd, s)
    s_norm = np.linalg.norm(s)
    v = s.conj() / s_norm
    z_hat = Z @ v
    simulated = Y_hat @ v
    model = math.sqrt(K * params.p * params.alpha) * cascade + z_hat
    return BdObservation(simulated, model, z_hat, float(s_norm ** 2))
