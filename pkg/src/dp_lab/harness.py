"""Monte Carlo check that both integration orders of E f(P, X) agree.

The left side draws ``P ~ D(k P0)`` and then ``X ~ P``.  The right side draws
``x ~ P0`` and then ``P`` from the posterior ``D(k P0 + delta_x)``.  The
integrands are a closed set of bounded functionals (:class:`FunctionSpec`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import (DirichletParams, DiscreteMeasure, Location, atom_mass, base_mass_of_set,
                      measure_mass_of_set)
from .montecarlo import McEstimate, mc_estimate, replicate_map
from .rng import RngStream
from .samplers import posterior_update, stick_breaking

KINDS = ("constant", "atom_mass_power", "set_mass", "set_mass_indicator")
_LANE_X = 4


@dataclass(frozen=True)
class FunctionSpec:
    """A bounded test integrand ``f(P, x)``.

    ``constant``: ``c``.  ``atom_mass_power``: ``P{x} ** gamma``.
    ``set_mass``: ``P(A)``.  ``set_mass_indicator``: ``P(A) * 1[x in B]``.
    """

    kind: str
    c: float = 1.0
    gamma: float = 1.0
    a: tuple[float, float] | None = None
    b: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown FunctionSpec kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "atom_mass_power" and not self.gamma >= 0:
            raise ValueError("gamma must be nonnegative")
        if self.kind in ("set_mass", "set_mass_indicator") and self.a is None:
            raise ValueError(f"{self.kind} needs a set A")
        if self.kind == "set_mass_indicator" and self.b is None:
            raise ValueError("set_mass_indicator needs a set B")
        if self.kind == "constant" and not math.isfinite(self.c):
            raise ValueError("constant must be finite")

    @classmethod
    def constant(cls, c: float = 1.0):
        return cls("constant", c=float(c))

    @classmethod
    def atom_mass_power(cls, gamma: float):
        return cls("atom_mass_power", gamma=float(gamma))

    @classmethod
    def set_mass(cls, a):
        return cls("set_mass", a=tuple(map(float, a)))

    @classmethod
    def set_mass_indicator(cls, a, b):
        return cls("set_mass_indicator", a=tuple(map(float, a)), b=tuple(map(float, b)))

    @property
    def bounds(self) -> tuple[float, float]:
        if self.kind == "constant":
            return (self.c, self.c)
        return (0.0, 1.0)

    def __call__(self, measure: DiscreteMeasure, x: Location, x_mass: float | None = None) -> float:
        """Evaluate on a measure; ``x_mass`` overrides ``P{x}`` (residual carrier)."""
        if self.kind == "constant":
            return self.c
        if self.kind == "atom_mass_power":
            px = atom_mass(measure, x) if x_mass is None else x_mass
            return px ** self.gamma if px > 0 or self.gamma > 0 else 0.0
        pa = measure_mass_of_set(measure, self.a)[0]
        if self.kind == "set_mass":
            return pa
        lo, hi = self.b
        return pa if lo <= x.value < hi else 0.0

    def truncation_allowance(self, trunc_eps: float) -> float:
        """Largest shift truncation can cause in one side's mean."""
        if self.kind == "constant":
            return 0.0
        if self.kind == "atom_mass_power":
            return (self.gamma + 2.0) * trunc_eps
        return trunc_eps

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant({self.c!r})"
        if self.kind == "atom_mass_power":
            return f"atom_mass_power({self.gamma!r})"
        if self.kind == "set_mass":
            return f"set_mass({list(self.a)})"
        return f"set_mass_indicator({list(self.a)},{list(self.b)})"


def analytic_value(f: FunctionSpec, params: DirichletParams) -> float:
    """Exact ``E f(P, X)`` where it is available in closed form."""
    from .discreteness import closed_form_expected_h_gamma

    if f.kind == "constant":
        return f.c
    if f.kind == "atom_mass_power":
        return closed_form_expected_h_gamma(params, f.gamma)
    base, k = params.base, params.k
    pa = base_mass_of_set(base, f.a)
    if f.kind == "set_mass":
        return pa
    pb = base_mass_of_set(base, f.b)
    lo, hi = max(f.a[0], f.b[0]), min(f.a[1], f.b[1])
    pab = base_mass_of_set(base, (lo, hi)) if lo < hi else 0.0
    return (k * pa * pb + pab) / (k + 1.0)


def _draw_from_measure(p: DiscreteMeasure, params: DirichletParams, stream: RngStream):
    # X ~ P with the residual realized as one extra fresh P0 atom
    gen = stream.lane(_LANE_X)
    u = gen.random() * (math.fsum(p.weights.tolist()) + p.residual)
    edges = np.cumsum(p.weights)
    j = int(np.searchsorted(edges, u, side="right"))
    if j < len(p):
        return Location(float(p.locations[j]), int(p.origin_ids[j])), None
    ids, vals = params.base.sample(gen, gen, 1, stream.fresh_origin_ids)
    loc = Location(float(vals[0]), int(ids[0]))
    return loc, p.residual + atom_mass(p, loc)


def lemma_lhs(f: FunctionSpec, params: DirichletParams, reps: int = 10_000, seed: int = 0,
              trunc_eps: float = 1e-10) -> McEstimate:
    """Estimate ``E f(P, X)`` by drawing ``P ~ D(k P0)`` and then ``X ~ P``."""
    def one(stream: RngStream) -> float:
        p = stick_breaking(params, stream, trunc_eps)
        x, x_mass = _draw_from_measure(p, params, stream)
        return f(p, x, x_mass)

    return mc_estimate(replicate_map(one, seed, reps), seed)


def lemma_rhs(f: FunctionSpec, params: DirichletParams, reps: int = 10_000, seed: int = 0,
              trunc_eps: float = 1e-10) -> McEstimate:
    """Estimate ``E f(P, X)`` by drawing ``x ~ P0`` and then ``P ~ D(k P0 + delta_x)``."""
    def one(stream: RngStream) -> float:
        gen = stream.lane(_LANE_X)
        ids, vals = params.base.sample(gen, gen, 1, stream.fresh_origin_ids)
        x = Location(float(vals[0]), int(ids[0]))
        p = stick_breaking(posterior_update(params, [x]), stream, trunc_eps)
        return f(p, x)

    return mc_estimate(replicate_map(one, seed, reps), seed)


@dataclass
class LemmaVerdict:
    """Outcome of comparing the two integration orders."""

    f: FunctionSpec
    params: DirichletParams
    lhs: McEstimate
    rhs: McEstimate
    allowance: float
    threshold: float = 3.0
    retry: LemmaVerdict | None = None

    @property
    def diff(self) -> float:
        return abs(self.lhs.mean - self.rhs.mean)

    @property
    def sigma(self) -> float:
        return math.hypot(self.lhs.se, self.rhs.se)

    @property
    def z(self) -> float:
        if self.diff == 0.0:
            return 0.0
        return self.diff / self.sigma if self.sigma > 0 else math.inf

    @property
    def first_passed(self) -> bool:
        return self.diff <= self.threshold * self.sigma + self.allowance

    @property
    def passed(self) -> bool:
        return self.first_passed or (self.retry is not None and self.retry.first_passed)

    def to_dict(self) -> dict:
        d = {
            "function": self.f.describe(),
            "k": self.params.k,
            "base": self.params.base.describe(),
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "z": self.z,
            "threshold": self.threshold,
            "allowance": self.allowance,
            "pass": self.passed,
        }
        if self.retry is not None:
            d["retry"] = self.retry.to_dict()
        return d


def derive_seed(seed: int, tag: int) -> int:
    """A reproducible 64-bit seed independent of ``seed`` for side ``tag``."""
    state = np.random.SeedSequence(int(seed), spawn_key=(2**32 - 1, tag)).generate_state(1, np.uint64)
    return int(state[0])


def lemma_equivalence_test(f: FunctionSpec, params: DirichletParams, reps: int = 10_000,
                           seed: int = 0, trunc_eps: float = 1e-10,
                           retry: bool = True) -> LemmaVerdict:
    """Compare ``lemma_lhs`` and ``lemma_rhs`` with a 3-sigma rule.

    Passes when ``|lhs - rhs| <= 3 sqrt(se_l**2 + se_r**2) + allowance``,
    where the allowance covers truncation bias on both sides.  A failure is
    re-run once on a fresh seed; both results are kept on the verdict.  The
    two sides use independent seeds so the standard errors combine in
    quadrature.
    """
    lhs = lemma_lhs(f, params, reps, seed, trunc_eps)
    rhs = lemma_rhs(f, params, reps, derive_seed(seed, 1), trunc_eps)
    verdict = LemmaVerdict(f, params, lhs, rhs, 2.0 * f.truncation_allowance(trunc_eps))
    if retry and not verdict.first_passed:
        verdict.retry = lemma_equivalence_test(f, params, reps, derive_seed(seed, 2), trunc_eps,
                                               retry=False)
    return verdict
