"""
Ties in the Polya urn
=====================

The urn generates an exchangeable sequence from ``D(k P0)`` without ever
building ``P``: a new value arrives with probability ``k / (k + m)``,
otherwise an earlier draw is repeated.  Two draws tie with probability
``1 / (k + 1)``, which equals ``E H_1(P) = E sum P{x}**2`` for a
continuous base.
"""

# %%
from dp_lab import DirichletParams, RngStream, polya_urn
from dp_lab.discreteness import closed_form_expected_h_gamma

# %%
# One long sequence: the number of distinct values grows like ``k log n``.
urn = polya_urn(DirichletParams(3.0), RngStream(2), 500)
print(f"500 draws, {urn.n_distinct} distinct values; largest clusters "
      f"{sorted(urn.counts.values(), reverse=True)[:5]}")

# %%
for k in (0.5, 1.0, 5.0):
    params = DirichletParams(k)
    reps = 20_000
    ties = sum(polya_urn(params, RngStream(3, i), 2).n_distinct == 1 for i in range(reps))
    print(f"k={k}: tie frequency {ties / reps:.4f}, "
          f"E H_1 = {closed_form_expected_h_gamma(params, 1.0):.4f}")
