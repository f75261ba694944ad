"""Seeded random streams, Gamma-function helpers and the basic samplers.

Every replicate of a Monte Carlo run owns one :class:`RngStream`, addressed by
``(seed, stream_id)``.  Streams are derived with :class:`numpy.random.SeedSequence`
spawn keys over the PCG64 bit generator, so distinct stream ids give
independent sequences and equal ids give bit-identical ones.
"""

from __future__ import annotations

import math

import numpy as np

#: Named in run manifests; bump when the draw sequence of any sampler changes.
GENERATOR_FAMILY = "numpy.PCG64/SeedSequence-spawn-key v1"

_MAX_U64 = 2**64 - 1


class RngStream:
    """A reproducible random stream for one replicate.

    Parameters
    ----------
    seed : int
        Run-level seed, ``0 <= seed < 2**64``.
    stream_id : int
        Replicate index, ``0 <= stream_id < 2**64``.

    Notes
    -----
    ``generator`` is the main lane.  Samplers that need prefix-stable draws
    (e.g. stick-breaking, where refining the truncation must extend the same
    stick sequence) ask for named sub-lanes via :meth:`lane`.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        seed, stream_id = int(seed), int(stream_id)
        if not 0 <= seed <= _MAX_U64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if not 0 <= stream_id <= _MAX_U64:
            raise ValueError(f"stream_id must be a 64-bit unsigned integer, got {stream_id}")
        self.seed = seed
        self.stream_id = stream_id
        self.generator = self._make(0)
        self._lanes: dict[int, np.random.Generator] = {}
        self._fresh = 0

    def _make(self, lane: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, lane))
        return np.random.Generator(np.random.PCG64(ss))

    def lane(self, lane: int) -> np.random.Generator:
        """Return the generator for sub-lane ``lane`` (``lane >= 1``)."""
        if lane < 1:
            raise ValueError("lane 0 is the main generator")
        gen = self._lanes.get(lane)
        if gen is None:
            gen = self._lanes[lane] = self._make(lane)
        return gen

    def fresh_origin_ids(self, n: int) -> np.ndarray:
        """Allocate ``n`` new atom labels for fresh continuous draws.

        Fresh labels are negative (``-1, -2, ...``) so they never collide with
        user-assigned base-atom labels, which are nonnegative.
        """
        ids = -(self._fresh + 1 + np.arange(n, dtype=np.int64))
        self._fresh += n
        return ids

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


_EULER_GAMMA = 0.57721566490153286061

# zeta(k) - 1 for k = 2..31
_ZETA_M1 = (
    6.4493406684822644e-1, 2.0205690315959429e-1, 8.2323233711138192e-2,
    3.6927755143369926e-2, 1.734306198444914e-2, 8.3492773819228268e-3,
    4.0773561979443394e-3, 2.0083928260822144e-3, 9.9457512781808534e-4,
    4.9418860411946456e-4, 2.460865533080483e-4, 1.2271334757848915e-4,
    6.1248135058704829e-5, 3.0588236307020494e-5, 1.5282259408651872e-5,
    7.6371976378997623e-6, 3.8172932649998399e-6, 1.9082127165539389e-6,
    9.5396203387279611e-7, 4.7693298678780646e-7, 2.3845050272773299e-7,
    1.1921992596531107e-7, 5.960818905125948e-8, 2.980350351465228e-8,
    1.4901554828365041e-8, 7.4507117898354295e-9, 3.7253340247884571e-9,
    1.862659723513049e-9, 9.3132743241966818e-10, 4.6566290650337841e-10,
)


def _lgamma1p_tail(z: float) -> float:
    # sum_{k>=2} (-1)^k (zeta(k) - 1) z^k / k, Horner from the small end
    acc = 0.0
    for j in range(len(_ZETA_M1) - 1, -1, -1):
        k = j + 2
        acc = acc * -z + _ZETA_M1[j] / k
    return acc * z * z


def log_gamma(x: float) -> float:
    """Natural log of the Gamma function for ``x > 0``.

    Around the zeros at 1 and 2 the log-Gamma series in ``zeta(k) - 1``
    keeps full relative accuracy; elsewhere ``math.lgamma`` is used.
    """
    x = float(x)
    if not x > 0 or math.isinf(x):
        raise ValueError(f"log_gamma requires a finite x > 0, got {x}")
    if 0.5 <= x < 1.5:
        z = x - 1.0
        return -math.log1p(z) + z * (1.0 - _EULER_GAMMA) + _lgamma1p_tail(z)
    if 1.5 <= x <= 2.5:
        z = x - 2.0
        return z * (1.0 - _EULER_GAMMA) + _lgamma1p_tail(z)
    return math.lgamma(x)


def log_gamma_ratio(a: float, delta: float) -> float:
    """``log(Gamma(a + delta) / Gamma(a))``; exactly 0 when ``delta == 0``."""
    if not a > 0:
        raise ValueError(f"gamma_ratio requires a > 0, got {a}")
    if not delta >= 0:
        raise ValueError(f"gamma_ratio requires delta >= 0, got {delta}")
    return log_gamma(a + delta) - log_gamma(a)


def gamma_ratio(a: float, delta: float) -> float:
    """``Gamma(a + delta) / Gamma(a)`` evaluated through log-gammas."""
    return math.exp(log_gamma_ratio(a, delta))


def _log_gamma_variates(gen: np.random.Generator, shape: float, size) -> np.ndarray:
    # Gamma(shape) for shape < 1 via G(shape+1) * U**(1/shape), kept in log
    # space so tiny shapes cannot underflow to an exact zero.
    if shape >= 1.0:
        return np.log(gen.standard_gamma(shape, size))
    g = gen.standard_gamma(shape + 1.0, size)
    u = gen.random(size)
    with np.errstate(over="ignore"):  # -inf is the exact limit for extreme shapes
        return np.log(g) + np.log1p(-u) / shape


def sample_gamma(stream: RngStream, shape: float, size=None):
    """Draw Gamma(shape, 1) variates; correct for any ``shape > 0``."""
    if not shape > 0:
        raise ValueError(f"shape must be positive, got {shape}")
    out = np.exp(_log_gamma_variates(stream.generator, float(shape), size))
    return float(out) if size is None else out


def sample_beta(stream: RngStream, a: float, b: float, size=None):
    """Draw Beta(a, b) as ``Ga / (Ga + Gb)`` from two independent Gamma draws."""
    if not (a > 0 and b > 0):
        raise ValueError(f"Beta parameters must be positive, got a={a}, b={b}")
    log_v, _ = beta_pair(stream.generator, a, b, size)
    v = np.exp(log_v)
    return float(v) if size is None else v


def beta_pair(gen: np.random.Generator, a: float, b: float, size):
    """Return ``(log V, log(1 - V))`` for ``V ~ Beta(a, b)``, accurately for tiny V."""
    la = _log_gamma_variates(gen, float(a), size)
    lb = _log_gamma_variates(gen, float(b), size)
    m = np.maximum(la, lb)
    lse = m + np.log(np.exp(la - m) + np.exp(lb - m))
    return la - lse, lb - lse


def sample_dirichlet(stream: RngStream, alphas) -> np.ndarray:
    """Draw one Dirichlet(alphas) vector.

    Components with ``alpha == 0`` are exactly zero in every draw (the
    degenerate-component convention); at least one alpha must be positive.
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim != 1 or alphas.size == 0:
        raise ValueError("alphas must be a non-empty 1-d sequence")
    if np.any(alphas < 0) or not np.all(np.isfinite(alphas)):
        raise ValueError("alphas must be finite and nonnegative")
    live = alphas > 0
    if not live.any():
        raise ValueError("at least one alpha must be positive")
    gen = stream.generator
    logs = np.array([_log_gamma_variates(gen, a, None) for a in alphas[live]])
    out = np.zeros_like(alphas)
    if np.isneginf(logs.max()):
        # every variate underflowed even in log space; small-alpha limit is
        # a unit mass on one component drawn with probability alpha / sum
        a = alphas[live]
        j = int(np.searchsorted(np.cumsum(a / a.sum()), gen.random(), side="right"))
        w = np.zeros(a.size)
        w[min(j, a.size - 1)] = 1.0
        out[live] = w
        return out
    w = np.exp(logs - logs.max())
    out[live] = w / math.fsum(w)
    return out
