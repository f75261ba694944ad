"""
Two ways to integrate f(P, X)
=============================

Draw ``P ~ D(k P0)`` and then ``X ~ P``, or draw ``x ~ P0`` and then ``P``
from the updated process ``D(k P0 + delta_x)``.  Both orders give the same
expectation.  Here each side is estimated separately and the two are
compared with a 3-sigma rule.
"""

# %%
from dp_lab import DirichletParams
from dp_lab.config import parse_base, parse_function
from dp_lab.harness import analytic_value, lemma_equivalence_test

params = DirichletParams(2.0, parse_base("mixed"))

# %%
# ``P{X}`` (atom mass at the sampled point), ``P(A)``, and ``P(A) 1[X in B]``.
for text in ("power:1", "set:0:0.5", "indicator:0:0.5:0.25:0.75"):
    f = parse_function(text)
    v = lemma_equivalence_test(f, params, reps=3000, seed=5)
    print(f"{f.describe():<40} lhs={v.lhs.mean:.4f} rhs={v.rhs.mean:.4f} "
          f"exact={analytic_value(f, params):.4f} z={v.z:.2f} pass={v.passed}")
