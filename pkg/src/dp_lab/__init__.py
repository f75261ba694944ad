"""Dirichlet-process random measures, samplers and Monte Carlo checks of their moment identities."""

from .discreteness import (AtomDensityReport, Certificate, HGammaRecord, HGammaValue,
                           atom_density_check, closed_form_expected_h_gamma,
                           discreteness_certificate, h_gamma, h_zero, lower_bound,
                           miss_probability, verify_h_gamma)
from .harness import (FunctionSpec, LemmaVerdict, analytic_value, lemma_equivalence_test,
                      lemma_lhs, lemma_rhs)
from .measure import (BaseMeasure, ContinuousSpec, DirichletParams, DiscreteMeasure, Location,
                      atom_mass, base_mass_of_set, measure_mass_of_set)
from .montecarlo import McEstimate, mc_estimate, replicate_map
from .rng import (GENERATOR_FAMILY, RngStream, gamma_ratio, log_gamma, sample_beta,
                  sample_dirichlet, sample_gamma)
from .samplers import (UrnState, finite_marginal, polya_urn, posterior_update, stick_breaking,
                       stick_breaking_fixed)

__version__ = "0.1.0"
