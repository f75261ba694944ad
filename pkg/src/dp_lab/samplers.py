"""Realizations of Dirichlet-process randomness.

Stick-breaking gives (truncated) random measures, the Pólya urn gives
predictive sequences with the measure integrated out, and finite marginals
give the Dirichlet law of ``(P(A_1), ..., P(A_m))`` over a partition.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .measure import (BaseMeasure, DirichletParams, DiscreteMeasure, Location,
                      _check_interval, base_mass_of_set)
from .rng import RngStream, beta_pair, sample_dirichlet

MAX_STICKS = 10_000_000
_FIRST_BLOCK = 64

# Sub-lanes of an RngStream used by stick-breaking.
_LANE_STICKS, _LANE_CHOICE, _LANE_VALUES = 1, 2, 3


def _stick_blocks(gen: np.random.Generator, k: float):
    # Block sizes never depend on the truncation level, so a finer trunc_eps
    # on the same stream extends the same stick sequence.
    size = _FIRST_BLOCK
    while True:
        yield beta_pair(gen, 1.0, k, size)
        size = min(2 * size, 1 << 20)


def _place_atoms(params: DirichletParams, stream: RngStream, log_w: np.ndarray,
                 residual: float) -> DiscreteMeasure:
    n = log_w.size
    ids, values = params.base.sample(stream.lane(_LANE_CHOICE), stream.lane(_LANE_VALUES),
                                     n, stream.fresh_origin_ids)
    w = np.exp(log_w)
    # sticks below the smallest double carry no representable mass
    keep = w > 0
    if not keep.all():
        ids, values, w = ids[keep], values[keep], w[keep]
    return DiscreteMeasure.merged(ids, values, w, residual)


def stick_breaking(params: DirichletParams, stream: RngStream,
                   trunc_eps: float = 1e-10) -> DiscreteMeasure:
    """Draw a truncated Dirichlet-process measure by stick-breaking.

    Sticks ``V_j ~ Beta(1, k)`` are broken until the remaining stick
    ``prod(1 - V_j)`` falls below ``trunc_eps``; the remainder becomes the
    measure's ``residual``.  Atoms landing on the same base atom are merged.
    """
    if not 0.0 < trunc_eps < 1.0:
        raise ValueError(f"trunc_eps must lie in (0, 1), got {trunc_eps}")
    log_eps = math.log(trunc_eps)
    gen = stream.lane(_LANE_STICKS)
    log_ws, carry, total = [], 0.0, 0
    for log_v, log_1mv in _stick_blocks(gen, params.k):
        log_rem = carry + np.cumsum(log_1mv)
        below = np.flatnonzero(log_rem < log_eps)
        stop = below[0] + 1 if below.size else log_v.size
        prev = np.concatenate(([carry], log_rem[:stop - 1]))
        log_ws.append(prev + log_v[:stop])
        total += stop
        if below.size:
            carry = float(log_rem[stop - 1])
            break
        carry = float(log_rem[-1])
        if total >= MAX_STICKS:
            raise RuntimeError(
                f"stick-breaking hit the {MAX_STICKS} stick cap with k={params.k}, "
                f"trunc_eps={trunc_eps}; remaining mass {math.exp(carry):.3g}")
    return _place_atoms(params, stream, np.concatenate(log_ws), math.exp(carry))


def stick_breaking_fixed(params: DirichletParams, stream: RngStream,
                         n_sticks: int) -> DiscreteMeasure:
    """Stick-breaking with exactly ``n_sticks`` sticks (before merging)."""
    n_sticks = int(n_sticks)
    if n_sticks < 1:
        raise ValueError("n_sticks must be >= 1")
    gen = stream.lane(_LANE_STICKS)
    parts_v, parts_1mv, got = [], [], 0
    for log_v, log_1mv in _stick_blocks(gen, params.k):
        take = min(log_v.size, n_sticks - got)
        parts_v.append(log_v[:take])
        parts_1mv.append(log_1mv[:take])
        got += take
        if got == n_sticks:
            break
    log_v = np.concatenate(parts_v)
    log_rem = np.cumsum(np.concatenate(parts_1mv))
    log_w = np.concatenate(([0.0], log_rem[:-1])) + log_v
    return _place_atoms(params, stream, log_w, math.exp(log_rem[-1]))


@dataclass
class UrnState:
    """An observed predictive sequence ``X_1..X_n`` and its multiplicities."""

    params: DirichletParams
    draws: list[Location] = field(default_factory=list)
    counts: Counter = field(default_factory=Counter)

    def to_dict(self) -> dict:
        return {
            "k": self.params.k,
            "draws": [{"origin_id": d.origin_id, "location": d.value} for d in self.draws],
            "counts": {str(i): c for i, c in self.counts.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @property
    def n_distinct(self) -> int:
        return len(self.counts)


def polya_urn(params: DirichletParams, stream: RngStream, n: int) -> UrnState:
    """Sample ``X_1..X_n`` from the Pólya-urn (Blackwell–MacQueen) scheme.

    Step ``m`` (``m`` earlier draws) takes a fresh ``P0`` draw with probability
    ``k / (k + m)`` and otherwise repeats a uniformly chosen earlier draw.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    k = params.k
    gen = stream.generator
    state = UrnState(params)
    u = gen.random(n)
    for m in range(n):
        if u[m] * (k + m) < k:
            ids, values = params.base.sample(gen, gen, 1, stream.fresh_origin_ids)
            loc = Location(float(values[0]), int(ids[0]))
        else:
            loc = state.draws[int(gen.integers(m))]
        state.draws.append(loc)
        state.counts[loc.origin_id] += 1
    return state


def posterior_update(params: DirichletParams, observations) -> DirichletParams:
    """Parameters of the posterior ``D(k P0 + sum_i delta_{x_i})``.

    Returns ``k' = k + n`` and base ``(k P0 + sum delta_{x_i}) / (k + n)``,
    with observations merged by origin id into the base's atoms.
    """
    obs = list(observations)
    if not obs:
        return params
    k, base = params.k, params.base
    k_new = k + len(obs)
    # unnormalized atom masses, keeping first-seen order
    raw: dict[int, list] = {loc.origin_id: [loc, k * m] for loc, m in base.atoms}
    for loc in obs:
        if loc.origin_id in raw:
            raw[loc.origin_id][1] += 1.0
        else:
            raw[loc.origin_id] = [loc, 1.0]
    atoms = tuple((loc, a / k_new) for loc, a in raw.values())
    cw = k * base.continuous_weight / k_new
    # absorb the rounding of the division so the base stays normalized
    drift = 1.0 - math.fsum([cw] + [m for _, m in atoms])
    if cw > 0:
        cw += drift
    else:
        loc0, m0 = atoms[0]
        atoms = ((loc0, m0 + drift),) + atoms[1:]
    return DirichletParams(k_new, BaseMeasure(cw, base.continuous, atoms))


def validate_partition(base: BaseMeasure, partition) -> list[tuple[float, float]]:
    """Check that half-open cells are disjoint and carry total base mass 1."""
    cells = [_check_interval(c) for c in partition]
    if not cells:
        raise ValueError("partition must have at least one cell")
    ordered = sorted(cells)
    for (_, hi), (lo, _) in zip(ordered, ordered[1:]):
        if lo < hi:
            raise ValueError(f"partition cells overlap near {lo}")
    total = math.fsum(base_mass_of_set(base, c) for c in cells)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"partition does not cover the support (base mass {total!r})")
    return cells


def finite_marginal(params: DirichletParams, partition, stream: RngStream) -> np.ndarray:
    """One draw of ``(P(A_1), ..., P(A_m)) ~ Dirichlet(k P0(A_1), ..., k P0(A_m))``."""
    cells = validate_partition(params.base, partition)
    alphas = [params.k * base_mass_of_set(params.base, c) for c in cells]
    return sample_dirichlet(stream, alphas)

