"""The atom-mass functional H_gamma and its expectation under a Dirichlet process.

For a discrete measure ``P`` with atom weights ``w_j``,

    H_gamma(P) = sum_j w_j ** (gamma + 1),      H_0(P) = sum_j w_j,

and under ``P ~ D(k P0)`` the expectation has the closed form

    E H_gamma(P) = int  Gamma(k P0{x} + 1 + gamma) / Gamma(k P0{x} + 1)
                      * Gamma(k + 1) / Gamma(k + 1 + gamma)  P0(dx),

bounded below by ``Gamma(1 + gamma) Gamma(k + 1) / Gamma(k + 1 + gamma)``,
which tends to 1 as ``gamma -> 0``.  Since ``H_gamma <= H_0 <= 1`` this forces
``E H_0 = 1``: the measure is discrete almost surely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .measure import DirichletParams, DiscreteMeasure, base_mass_of_set, measure_mass_of_set
from .montecarlo import McEstimate, mc_estimate, replicate_map
from .rng import RngStream, log_gamma_ratio
from .samplers import stick_breaking

DEFAULT_GAMMA_GRID = (2.0, 1.0, 0.5, 0.1, 0.01, 1e-3)
DEFAULT_TRUNC_LADDER = (1e-2, 1e-4, 1e-8)


@dataclass(frozen=True)
class HGammaValue:
    """``H_gamma`` of a truncated measure with bounds for the untruncated value.

    Notes
    -----
    The explicit atoms give ``value``, a lower bound since every omitted atom
    contributes a nonnegative term.  The residual ``r`` can add at most
    ``(gamma + 1) r`` by growing existing atoms (the map ``w -> w**(gamma+1)``
    has slope at most ``gamma + 1`` on ``[0, 1]``) plus at most ``r`` through
    new atoms (``s**(gamma+1) <= s``).  ``upper_bracket`` uses
    ``value + (gamma + 2) r``, clipped to 1.
    """

    value: float
    lower_bracket: float
    upper_bracket: float

    @property
    def width(self) -> float:
        return self.upper_bracket - self.lower_bracket


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (gamma >= 0 and math.isfinite(gamma)):
        raise ValueError(f"gamma must be a finite nonnegative real, got {gamma}")
    return gamma


def h_gamma(measure: DiscreteMeasure, gamma: float) -> HGammaValue:
    """``sum_j w_j ** (gamma + 1)`` over the explicit atoms, with truncation brackets."""
    gamma = _check_gamma(gamma)
    w = measure.weights
    terms = w if gamma == 0.0 else w ** (gamma + 1.0)
    value = math.fsum(terms.tolist())
    upper = min(1.0, value + (gamma + 2.0) * measure.residual)
    return HGammaValue(value, value, max(upper, value))


def h_zero(measure: DiscreteMeasure) -> HGammaValue:
    """Total atomic mass ``H_0``; identical to ``h_gamma(measure, 0)``."""
    return h_gamma(measure, 0.0)


def _log_integrand(a0: float, k: float, gamma: float) -> float:
    return log_gamma_ratio(a0 + 1.0, gamma) - log_gamma_ratio(k + 1.0, gamma)


def closed_form_expected_h_gamma(params: DirichletParams, gamma: float) -> float:
    """``E H_gamma(P)`` for ``P ~ D(k P0)``.

    The integrand depends on ``x`` only through ``k P0{x}``: it is constant
    (``P0{x} = 0``) over the continuous part and evaluated atom by atom
    elsewhere.
    """
    gamma = _check_gamma(gamma)
    k, base = params.k, params.base
    terms = []
    if base.continuous_weight > 0:
        terms.append(base.continuous_weight * math.exp(_log_integrand(0.0, k, gamma)))
    for _, m in base.atoms:
        terms.append(m * math.exp(_log_integrand(k * m, k, gamma)))
    return math.fsum(terms)


def lower_bound(k: float, gamma: float) -> float:
    """``Gamma(1 + gamma) Gamma(k + 1) / Gamma(k + 1 + gamma)``, in ``(0, 1]``."""
    k = float(k)
    if not (k > 0 and math.isfinite(k)):
        raise ValueError(f"k must be a finite positive real, got {k}")
    return math.exp(_log_integrand(0.0, k, _check_gamma(gamma)))


@dataclass
class HGammaRecord:
    """One row of an ``E H_gamma`` verification."""

    gamma: float
    closed_form: float
    mc: McEstimate
    bracket: tuple[float, float]  # replicate means of lower / upper brackets
    lower_bound: float

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    @property
    def deviation(self) -> float:
        return abs(self.mc.mean - self.closed_form)

    @property
    def z_score(self) -> float:
        """Deviation beyond the bracket width, in standard errors."""
        excess = max(0.0, self.deviation - self.width)
        if excess == 0.0:
            return 0.0
        return excess / self.mc.se if self.mc.se > 0 else math.inf

    @property
    def passed(self) -> bool:
        return self.z_score <= 3.0

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "closed_form": self.closed_form,
            "mc_mean": self.mc.mean,
            "mc_se": self.mc.se,
            "bracket": list(self.bracket),
            "z_score": self.z_score,
            "pass": self.passed,
        }


def _hgamma_rows(params, gammas, reps, seed, trunc_eps):
    def one(stream: RngStream):
        p = stick_breaking(params, stream, trunc_eps)
        return [h_gamma(p, g) for g in gammas]

    per_rep = replicate_map(one, seed, reps)
    rows = []
    for j, g in enumerate(gammas):
        vals = [r[j] for r in per_rep]
        mc = mc_estimate([v.value for v in vals], seed)
        lo = math.fsum(v.lower_bracket for v in vals) / reps
        hi = math.fsum(v.upper_bracket for v in vals) / reps
        rows.append(HGammaRecord(g, closed_form_expected_h_gamma(params, g), mc, (lo, hi),
                                 lower_bound(params.k, g)))
    return rows


def verify_h_gamma(params: DirichletParams, gammas, reps: int = 10_000, seed: int = 0,
                   trunc_eps: float = 1e-10) -> list[HGammaRecord]:
    """Monte Carlo ``E H_gamma`` from stick-breaking draws against the closed form.

    One set of draws is shared by every ``gamma`` (common random numbers).
    """
    gammas = [_check_gamma(g) for g in np.atleast_1d(gammas)]
    return _hgamma_rows(params, gammas, int(reps), seed, trunc_eps)


@dataclass
class Certificate:
    """Evidence for ``E H_0 = 1`` assembled along a decreasing ``gamma`` grid."""

    params: DirichletParams
    records: list[HGammaRecord]
    squeeze_gamma: float
    squeeze_value: float
    squeeze_tol: float

    @property
    def matches(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def monotone(self) -> bool:
        seq = [r.closed_form for r in self.records] + [self.squeeze_value]
        return all(b >= a for a, b in zip(seq, seq[1:]))

    @property
    def squeezed(self) -> bool:
        return abs(1.0 - self.squeeze_value) <= self.squeeze_tol

    @property
    def passed(self) -> bool:
        return self.matches and self.monotone and self.squeezed

    def to_dict(self) -> dict:
        return {
            "k": self.params.k,
            "base": self.params.base.describe(),
            "records": [r.to_dict() for r in self.records],
            "squeeze": {"gamma": self.squeeze_gamma, "closed_form": self.squeeze_value,
                        "tol": self.squeeze_tol, "pass": self.squeezed},
            "monotone": self.monotone,
            "pass": self.passed,
        }


def discreteness_certificate(params: DirichletParams, gamma_grid=DEFAULT_GAMMA_GRID,
                             reps: int = 10_000, seed: int = 0, trunc_eps: float = 1e-10,
                             squeeze_gamma: float = 1e-6,
                             squeeze_tol: float = 1e-4) -> Certificate:
    """Check ``E H_gamma`` by simulation on a grid and its squeeze toward 1.

    ``H_0`` cannot be checked by simulation directly because a truncated
    draw is discrete by construction.  Instead each grid point compares the
    Monte Carlo mean with the closed form, the closed form must be
    nondecreasing as ``gamma`` decreases, and at ``squeeze_gamma`` it must be
    within ``squeeze_tol`` of 1.
    """
    grid = [float(g) for g in gamma_grid]
    if not grid or any(not g > 0 for g in grid):
        raise ValueError("gamma_grid must be non-empty and strictly positive")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("gamma_grid must be strictly decreasing")
    if not 0 < squeeze_gamma <= grid[-1]:
        raise ValueError("squeeze_gamma must be positive and below the grid")
    records = _hgamma_rows(params, grid, int(reps), seed, trunc_eps)
    return Certificate(params, records, squeeze_gamma,
                       closed_form_expected_h_gamma(params, squeeze_gamma), squeeze_tol)


def miss_probability(params: DirichletParams, interval, trunc_eps: float) -> float:
    """Probability that a truncated stick-breaking draw has no atom in ``interval``.

    ``-log(1 - V_j)`` is Exponential(k) for ``V_j ~ Beta(1, k)``, so the number
    of sticks is ``1 + Poisson(k log(1/trunc_eps))`` and each lands in the
    interval independently with probability ``p = P0(interval)``.
    """
    p = base_mass_of_set(params.base, interval)
    lam = params.k * math.log(1.0 / trunc_eps)
    return (1.0 - p) * math.exp(-lam * p)


@dataclass
class IntervalDensity:
    interval: tuple[float, float]
    base_mass: float
    present_freq: float
    mean_count: float
    miss_probability: float
    ladder_means: list[float] = field(default_factory=list)

    @property
    def all_present(self) -> bool:
        return self.present_freq == 1.0

    @property
    def ladder_increasing(self) -> bool:
        m = self.ladder_means
        return all(b > a for a, b in zip(m, m[1:]))

    def to_dict(self) -> dict:
        return {
            "interval": list(self.interval),
            "base_mass": self.base_mass,
            "present_freq": self.present_freq,
            "mean_count": self.mean_count,
            "miss_probability": self.miss_probability,
            "ladder_means": self.ladder_means,
            "all_present": self.all_present,
            "ladder_increasing": self.ladder_increasing,
            "pass": self.all_present and self.ladder_increasing,
        }


@dataclass
class AtomDensityReport:
    trunc_eps: float
    ladder: tuple[float, ...]
    reps: int
    intervals: list[IntervalDensity]

    @property
    def passed(self) -> bool:
        return all(i.all_present and i.ladder_increasing for i in self.intervals)

    def to_dict(self) -> dict:
        return {"trunc_eps": self.trunc_eps, "ladder": list(self.ladder), "reps": self.reps,
                "intervals": [i.to_dict() for i in self.intervals], "pass": self.passed}


def atom_density_check(params: DirichletParams, intervals, reps: int = 1000, seed: int = 0,
                       trunc_eps: float = 1e-10,
                       ladder=DEFAULT_TRUNC_LADDER) -> AtomDensityReport:
    """Check that sets of positive base mass carry atoms, with counts growing under refinement.

    Each replicate stream is reused across ``trunc_eps`` and the ladder, so
    a finer truncation extends the same stick sequence and counts are paired.
    """
    cells = [tuple(float(v) for v in iv) for iv in intervals]
    for iv in cells:
        if not base_mass_of_set(params.base, iv) > 0:
            raise ValueError(f"interval {iv} has zero base mass; the corollary does not apply")
    ladder = tuple(float(e) for e in ladder)
    levels = (trunc_eps,) + ladder

    def one(stream_factory):
        out = []
        for eps in levels:
            p = stick_breaking(params, stream_factory(), eps)
            out.append([measure_mass_of_set(p, iv)[1] for iv in cells])
        return out

    per_rep = replicate_map(one, seed, reps, pass_factory=True)
    counts = np.array(per_rep)  # reps x levels x cells
    report = []
    for c, iv in enumerate(cells):
        main = counts[:, 0, c]
        report.append(IntervalDensity(
            iv, base_mass_of_set(params.base, iv),
            float(np.count_nonzero(main)) / reps,
            math.fsum(main.tolist()) / reps,
            miss_probability(params, iv, trunc_eps),
            [math.fsum(counts[:, 1 + j, c].tolist()) / reps for j in range(len(ladder))],
        ))
    return AtomDensityReport(trunc_eps, ladder, reps, report)
