"""System parameters and seeded generation of channel realizations.

Random streams
--------------
Every random draw in the package comes from :func:`make_rng`, which builds a
Philox counter-based generator keyed by ``numpy.random.SeedSequence(seed,
spawn_key=labels)``. ``labels`` is a tuple of small non-negative integers
naming the purpose of the stream (realization index, trial block, ...), so
adding realizations never reshuffles the ones already drawn.

Circularly-symmetric complex Gaussian entries are produced by Box-Muller on
two uniforms: ``z = sqrt(-beta ln u1) exp(2 pi i u2)`` with ``u1`` in (0, 1].
Real and imaginary parts then each have variance ``beta / 2``.

Channel draws consume the stream in the order ``hd`` (M entries), then for
each BD ``j = 0..J-1`` the pair ``h_j`` followed by ``g_j`` (M entries). A
realization with J BDs is therefore a prefix of the one with more BDs under
the same seed.
"""

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import ValidationError

# spawn-key tags for the different consumers of a master seed
STREAM_CHANNEL = 0
STREAM_SYMBOLS = 1
STREAM_NOISE = 2
STREAM_RANDOMIZATION = 3


class BdSymbolModel(str, enum.Enum):
    CSCG = "CSCG"
    UNIT_MODULUS = "UnitModulusUniformPhase"


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """Physical and configuration knobs, all in linear scale.

    ``p`` and ``sigma2`` are in watts, the ``beta_*`` are average power gains
    of the direct, PT-to-BD and BD-to-AP channels.
    """

    p: float = 1e-3
    alpha: float = 1.0
    sigma2: float = 1e-14
    K: int = 128
    M: int = 4
    J: int = 0
    beta_hd: float = 1e-12
    beta_h: float = 1e-11
    beta_g: float = 1e-2
    bd_symbol_model: BdSymbolModel = BdSymbolModel.CSCG

    def __post_init__(self):
        object.__setattr__(self, "bd_symbol_model", BdSymbolModel(self.bd_symbol_model))
        if not self.p > 0:
            raise ValidationError(f"p must be > 0, got {self.p}")
        if not self.sigma2 > 0:
            raise ValidationError(f"sigma2 must be > 0, got {self.sigma2}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in [0, 1], got {self.alpha}")
        for name in ("K", "M"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v}")
        if int(self.J) != self.J or self.J < 0:
            raise ValidationError(f"J must be a non-negative integer, got {self.J}")
        for name in ("beta_hd", "beta_h", "beta_g"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")

    @classmethod
    def from_db(cls, p_dbm=0.0, sigma2_dbm=-110.0, beta_hd_db=-120.0,
                beta_h_db=-110.0, beta_g_db=-20.0, **kw):
        """Build from the dB/dBm values used in the simulation setup."""
        return cls(
            p=float(dbm_to_watts(p_dbm)),
            sigma2=float(dbm_to_watts(sigma2_dbm)),
            beta_hd=float(db_to_linear(beta_hd_db)),
            beta_h=float(db_to_linear(beta_h_db)),
            beta_g=float(db_to_linear(beta_g_db)),
            **kw,
        )

    def with_(self, **changes):
        return replace(self, **changes)


def make_rng(seed, *labels):
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(v) for v in labels))
    return np.random.Generator(np.random.Philox(seq))


def cscg(rng, shape, var=1.0):
    """Box-Muller draws of CN(0, var) with the given shape."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    u = rng.random(shape + (2,))
    u1 = 1.0 - u[..., 0]
    u2 = u[..., 1]
    return np.sqrt(-var * np.log(u1)) * np.exp(2j * np.pi * u2)


def unit_modulus(rng, shape):
    return np.exp(2j * np.pi * rng.random(shape))


def draw_bd_symbols(rng, shape, model):
    if BdSymbolModel(model) is BdSymbolModel.CSCG:
        return cscg(rng, shape)
    return unit_modulus(rng, shape)


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the direct, forward and backscatter channels.

    ``h`` has shape (J,), ``g`` has shape (J, M), and ``sic_order`` lists BD
    indices (0-based) from strongest to weakest cascaded channel.
    """

    hd: np.ndarray
    h: np.ndarray
    g: np.ndarray
    sic_order: np.ndarray = field(default=None)

    def __post_init__(self):
        hd = _frozen(self.hd).reshape(-1)
        h = _frozen(self.h).reshape(-1)
        g = _frozen(self.g).reshape(len(h), hd.size)
        for name, a in (("hd", hd), ("h", h), ("g", g)):
            if not np.all(np.isfinite(a)):
                raise ValidationError(f"{name} has non-finite entries")
        object.__setattr__(self, "hd", hd)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        order = sic_order_from(cascaded_strengths(h, g))
        if self.sic_order is not None:
            given = np.asarray(self.sic_order, dtype=int)
            if not np.array_equal(given, order):
                raise ValidationError("sic_order does not match the cascaded strengths")
        order.flags.writeable = False
        object.__setattr__(self, "sic_order", order)

    @property
    def M(self):
        return self.hd.size

    @property
    def J(self):
        return self.h.size

    def subset(self, J):
        """The realization restricted to its first ``J`` BDs."""
        return ChannelRealization(self.hd, self.h[:J], self.g[:J])


def cascaded_strengths(h, g):
    return np.abs(h) ** 2 * np.sum(np.abs(g) ** 2, axis=1)


def sic_order_from(strengths):
    # stable sort on the negated key keeps lower indices first among ties
    return np.argsort(-np.asarray(strengths, dtype=float), kind="stable")


def cascaded_strength(real, j):
    """``|h_j|^2 ||g_j||^2`` for BD ``j`` (0-based)."""
    if not 0 <= j < real.J:
        raise ValidationError(f"BD index {j} out of range for J={real.J}")
    return float(abs(real.h[j]) ** 2 * np.vdot(real.g[j], real.g[j]).real)


def sic_order(real):
    return np.array(real.sic_order)


def sample_channels(params, seed, realization=0):
    """Draw one channel realization for ``params`` from ``(seed, realization)``."""
    rng = make_rng(seed, STREAM_CHANNEL, realization)
    M, J = params.M, params.J
    hd = cscg(rng, M, params.beta_hd)
    h = np.empty(J, dtype=complex)
    g = np.empty((J, M), dtype=complex)
    # per-BD draws interleaved so that smaller J is a prefix of larger J
    if J:
        block = cscg(rng, (J, M + 1))
        h[:] = block[:, 0] * np.sqrt(params.beta_h)
        g[:] = block[:, 1:] * np.sqrt(params.beta_g)
    return ChannelRealization(hd, h, g)
