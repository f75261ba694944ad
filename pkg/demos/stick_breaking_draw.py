"""
A single Dirichlet-process draw
===============================

A draw ``P ~ D(k P0)`` is built by stick-breaking: ``V_j ~ Beta(1, k)``
breaks off a fraction of the remaining stick and the piece goes to a fresh
location from ``P0``.  The construction stops once the unbroken remainder
falls below ``trunc_eps``; that remainder is kept as an explicit residual.
"""

# %%
# Draw from a uniform base with concentration 2.
from dp_lab import BaseMeasure, DirichletParams, RngStream, stick_breaking
from dp_lab.discreteness import h_zero

params = DirichletParams(2.0, BaseMeasure.uniform())
p = stick_breaking(params, RngStream(seed=7), trunc_eps=1e-10)
print(f"{len(p)} atoms, residual {p.residual:.2e}")

# %%
# The largest few atoms carry most of the mass.
order = p.weights.argsort()[::-1][:8]
for j in order:
    print(f"  x = {p.locations[j]:.4f}   w = {p.weights[j]:.4f}")

# %%
# Total atomic mass is ``1 - residual``; the bracket bounds the
# untruncated value.
h = h_zero(p)
print(f"H_0 = {h.value:.12f}, bracket [{h.lower_bracket:.12f}, {h.upper_bracket:.12f}]")

# %%
# A base with an atom: ties with the base atom are merged by origin id.
from dp_lab.config import parse_base

mixed = DirichletParams(2.0, parse_base("0.5*uniform(0,1)+0.5*atom(0.2)"))
q = stick_breaking(mixed, RngStream(seed=7))
print(f"mass at the base atom 0.2: {q.weights[q.origin_ids == 0].sum():.4f}")
