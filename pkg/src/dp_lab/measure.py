"""Base measures, realized discrete measures and Dirichlet-process parameters.

Atoms are identified by an integer ``origin_id``, never by floating-point
location equality.  Base-measure atoms carry user-chosen nonnegative ids;
fresh continuous draws receive negative ids from their stream's counter.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

MASS_TOL = 1e-12
CSV_SCHEMA = "# dp-lab discrete-measure v1"


@dataclass(frozen=True)
class Location:
    """A point on the real line tagged with the draw that produced it.

    Equality and hashing use ``origin_id`` only.
    """

    value: float = field(compare=False)
    origin_id: int


@dataclass(frozen=True)
class ContinuousSpec:
    """Continuous component of a base measure: ``uniform(a, b)`` or ``normal(mu, sigma)``."""

    kind: str = "uniform"
    params: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        a, b = (float(p) for p in self.params)
        object.__setattr__(self, "params", (a, b))
        if self.kind == "uniform":
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ValueError(f"uniform needs finite a < b, got ({a}, {b})")
        elif self.kind == "normal":
            if not (math.isfinite(a) and b > 0 and math.isfinite(b)):
                raise ValueError(f"normal needs finite mu and sigma > 0, got ({a}, {b})")
        else:
            raise ValueError(f"unsupported continuous spec {self.kind!r}")

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        a, b = self.params
        if self.kind == "uniform":
            return gen.uniform(a, b, size)
        return a + b * gen.standard_normal(size)

    def prob(self, lo: float, hi: float) -> float:
        """Probability of ``[lo, hi)``."""
        a, b = self.params
        if self.kind == "uniform":
            return max(0.0, min(hi, b) - max(lo, a)) / (b - a)
        dist = NormalDist(a, b)
        return max(0.0, dist.cdf(hi) - dist.cdf(lo))

    @property
    def support(self) -> tuple[float, float]:
        return self.params if self.kind == "uniform" else (-math.inf, math.inf)

    def describe(self) -> str:
        a, b = self.params
        return f"{self.kind}({a!r},{b!r})"


def _check_interval(interval) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in interval)
    except (TypeError, ValueError):
        raise ValueError(f"interval must be a (lo, hi) pair, got {interval!r}") from None
    if math.isnan(lo) or math.isnan(hi) or not lo < hi:
        raise ValueError(f"interval needs lo < hi, got [{lo}, {hi})")
    return lo, hi


@dataclass(frozen=True)
class BaseMeasure:
    """A probability measure: weighted continuous part plus finitely many atoms.

    Parameters
    ----------
    continuous_weight : float
        Mass of the continuous component, in ``[0, 1]``.
    continuous : ContinuousSpec
        Distribution of the continuous component (uniform(0, 1) by default).
    atoms : tuple of (Location, float)
        Atoms and their masses; ids distinct, masses in ``(0, 1]``.
    """

    continuous_weight: float = 1.0
    continuous: ContinuousSpec = ContinuousSpec()
    atoms: tuple[tuple[Location, float], ...] = ()

    def __post_init__(self):
        atoms = tuple((loc, float(m)) for loc, m in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        cw = float(self.continuous_weight)
        object.__setattr__(self, "continuous_weight", cw)
        if not 0.0 <= cw <= 1.0:
            raise ValueError(f"continuous_weight must lie in [0, 1], got {cw}")
        ids = [loc.origin_id for loc, _ in atoms]
        if len(set(ids)) != len(ids):
            raise ValueError("base atoms must have distinct origin ids")
        if any(not 0.0 < m <= 1.0 for _, m in atoms):
            raise ValueError("base atom masses must lie in (0, 1]")
        total = math.fsum([cw] + [m for _, m in atoms])
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"base measure total mass is {total!r}, expected 1")

    @classmethod
    def uniform(cls, a: float = 0.0, b: float = 1.0) -> BaseMeasure:
        return cls(1.0, ContinuousSpec("uniform", (a, b)))

    @classmethod
    def normal(cls, mu: float = 0.0, sigma: float = 1.0) -> BaseMeasure:
        return cls(1.0, ContinuousSpec("normal", (mu, sigma)))

    @classmethod
    def point(cls, x: float, origin_id: int = 0) -> BaseMeasure:
        """The point mass at ``x``."""
        return cls(0.0, ContinuousSpec(), ((Location(x, origin_id), 1.0),))

    @property
    def atom_ids(self) -> np.ndarray:
        return np.array([loc.origin_id for loc, _ in self.atoms], dtype=np.int64)

    @property
    def atom_values(self) -> np.ndarray:
        return np.array([loc.value for loc, _ in self.atoms], dtype=float)

    @property
    def atom_masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms], dtype=float)

    def atom_mass(self, loc: Location) -> float:
        """``P0{x}``: the listed mass for a matching origin id, else exactly 0."""
        for atom, m in self.atoms:
            if atom.origin_id == loc.origin_id:
                return m
        return 0.0

    def sample(self, gen_choice: np.random.Generator, gen_value: np.random.Generator,
               n: int, fresh_ids) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``n`` locations; returns ``(origin_ids, values)``.

        ``fresh_ids(m)`` supplies labels for the continuous draws.  Component
        choices and continuous values come from separate generators so the
        first ``n`` draws are a prefix of any longer request.
        """
        ids = np.empty(n, dtype=np.int64)
        values = np.empty(n, dtype=float)
        if not self.atoms:
            cont = np.ones(n, dtype=bool)
        elif self.continuous_weight == 0.0 and len(self.atoms) == 1:
            cont = np.zeros(n, dtype=bool)
            ids[:] = self.atoms[0][0].origin_id
            values[:] = self.atoms[0][0].value
        else:
            u = gen_choice.random(n)
            edges = np.cumsum(self.atom_masses)
            cont = u < self.continuous_weight
            idx = np.searchsorted(edges, u[~cont] - self.continuous_weight, side="right")
            idx = np.minimum(idx, len(self.atoms) - 1)
            ids[~cont] = self.atom_ids[idx]
            values[~cont] = self.atom_values[idx]
        m = int(cont.sum())
        if m:
            ids[cont] = fresh_ids(m)
            values[cont] = self.continuous.sample(gen_value, m)
        return ids, values

    def describe(self) -> str:
        parts = []
        if self.continuous_weight > 0:
            parts.append(f"{self.continuous_weight!r}*{self.continuous.describe()}")
        parts += [f"{m!r}*atom({loc.value!r})#{loc.origin_id}" for loc, m in self.atoms]
        return "+".join(parts)


def base_mass_of_set(base: BaseMeasure, interval) -> float:
    """``P0([lo, hi))``: weighted continuous probability plus base atoms inside."""
    lo, hi = _check_interval(interval)
    cont = base.continuous_weight * base.continuous.prob(lo, hi) if base.continuous_weight else 0.0
    return math.fsum([cont] + [m for loc, m in base.atoms if lo <= loc.value < hi])


@dataclass(frozen=True)
class DirichletParams:
    """The parameter measure ``k * P0`` of a Dirichlet process."""

    k: float
    base: BaseMeasure = BaseMeasure()

    def __post_init__(self):
        k = float(self.k)
        if not (k > 0 and math.isfinite(k)):
            raise ValueError(f"k must be a finite positive real, got {self.k!r}")
        object.__setattr__(self, "k", k)


class DiscreteMeasure:
    """A realized (possibly truncated) random measure.

    Atoms are held as read-only arrays ``origin_ids``, ``locations`` and
    ``weights``; ``residual`` is the stick mass not assigned to any explicit
    atom.  Weights plus residual sum to one within ``MASS_TOL``.
    """

    __slots__ = ("origin_ids", "locations", "weights", "residual")

    def __init__(self, origin_ids, locations, weights, residual: float = 0.0):
        ids = np.array(origin_ids, dtype=np.int64).reshape(-1)
        locs = np.array(locations, dtype=float).reshape(-1)
        w = np.array(weights, dtype=float).reshape(-1)
        residual = float(residual)
        if not (ids.size == locs.size == w.size):
            raise ValueError("origin_ids, locations and weights must have equal length")
        if np.any(~(w > 0)) or np.any(w > 1):
            raise ValueError("atom weights must lie in (0, 1]")
        if not 0.0 <= residual < 1.0:
            raise ValueError(f"residual must lie in [0, 1), got {residual}")
        if np.unique(ids).size != ids.size:
            raise ValueError("atom origin ids must be distinct (merge duplicates first)")
        total = math.fsum(w.tolist() + [residual])
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"weights + residual = {total!r}, expected 1")
        for arr in (ids, locs, w):
            arr.flags.writeable = False
        object.__setattr__(self, "origin_ids", ids)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "residual", residual)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteMeasure is immutable")

    @classmethod
    def merged(cls, origin_ids, locations, weights, residual: float = 0.0) -> DiscreteMeasure:
        """Build a measure, summing the weights of atoms that share an origin id.

        Atoms keep the order of their first occurrence.
        """
        ids = np.asarray(origin_ids, dtype=np.int64)
        locs = np.asarray(locations, dtype=float)
        w = np.asarray(weights, dtype=float)
        uniq, first, inverse = np.unique(ids, return_index=True, return_inverse=True)
        if uniq.size == ids.size:
            return cls(ids, locs, w, residual)
        # summation can round a lone merged atom just past 1
        summed = np.minimum(np.bincount(inverse, weights=w, minlength=uniq.size), 1.0)
        order = np.argsort(first, kind="stable")
        return cls(uniq[order], locs[first[order]], summed[order], residual)

    @classmethod
    def from_atoms(cls, atoms, residual: float = 0.0) -> DiscreteMeasure:
        atoms = list(atoms)
        return cls([a.origin_id for a, _ in atoms], [a.value for a, _ in atoms],
                   [w for _, w in atoms], residual)

    @property
    def atoms(self) -> list[tuple[Location, float]]:
        return [(Location(float(v), int(i)), float(w))
                for i, v, w in zip(self.origin_ids, self.locations, self.weights)]

    def __len__(self) -> int:
        return int(self.weights.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (self.residual == other.residual
                and np.array_equal(self.origin_ids, other.origin_ids)
                and np.array_equal(self.locations, other.locations)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None

    def __repr__(self) -> str:
        return f"DiscreteMeasure(n_atoms={len(self)}, residual={self.residual!r})"

    def normalize(self) -> DiscreteMeasure:
        """Fold the residual into the atoms proportionally to their weights."""
        if self.residual == 0.0 or not len(self):
            return self
        w = self.weights / math.fsum(self.weights.tolist())
        return DiscreteMeasure(self.origin_ids, self.locations, w, 0.0)

    # -- serialization -------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_SCHEMA + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["origin_id", "location", "weight"])
        for i, v, w in zip(self.origin_ids.tolist(), self.locations.tolist(), self.weights.tolist()):
            writer.writerow([i, repr(v), repr(w)])
        buf.write(f"# residual={self.residual!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> DiscreteMeasure:
        residual = None
        rows = []
        for line in text.splitlines():
            if line.startswith("# residual="):
                residual = float(line.split("=", 1)[1])
            elif line and not line.startswith("#"):
                rows.append(line)
        if residual is None:
            raise ValueError("missing '# residual=' trailer")
        reader = csv.DictReader(rows)
        recs = list(reader)
        return cls([int(r["origin_id"]) for r in recs], [float(r["location"]) for r in recs],
                   [float(r["weight"]) for r in recs], residual)

    def to_dict(self) -> dict:
        return {
            "atoms": [{"origin_id": i, "location": v, "weight": w}
                      for i, v, w in zip(self.origin_ids.tolist(), self.locations.tolist(),
                                         self.weights.tolist())],
            "residual": self.residual,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> DiscreteMeasure:
        d = json.loads(text)
        atoms = d["atoms"]
        return cls([a["origin_id"] for a in atoms], [a["location"] for a in atoms],
                   [a["weight"] for a in atoms], d["residual"])


def atom_mass(measure: DiscreteMeasure, loc: Location) -> float:
    """``P{x}`` for the atom labelled ``loc.origin_id``; 0 for non-atoms.

    The residual is never attributed to any location.
    """
    hit = np.flatnonzero(measure.origin_ids == loc.origin_id)
    return float(measure.weights[hit[0]]) if hit.size else 0.0


def measure_mass_of_set(measure: DiscreteMeasure, interval) -> tuple[float, int]:
    """Total weight and number of explicit atoms located in ``[lo, hi)``."""
    lo, hi = _check_interval(interval)
    inside = (measure.locations >= lo) & (measure.locations < hi)
    return math.fsum(measure.weights[inside].tolist()), int(inside.sum())
