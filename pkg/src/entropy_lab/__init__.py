"""Measure-theoretic entropy on countable topological Markov shifts."""

from .entropy import (EntropyEstimate, birkhoff_concentration, katok_estimate,
                      markov_entropy, plugin_entropy, simplified_formula_report,
                      smb_deviation, tail_entropy_bound)
from .errors import (BudgetError, ConfigError, DomainError, EntropyLabError,
                     InsufficientDataError, InsufficientMassError, NotIntegrableError,
                     NotPrimitiveError)
from .measures import (Bernoulli, Markov, Mixture, PeriodicOrbit, ProperWeight,
                       ShiftMeasure, cylinder_log_mass, kac_return_masses,
                       measure_from_json, tightness_verdict, total_mass, vague_gap)
from .shift_space import (Alphabet, TransitionStructure, ball_as_cylinder, check_primitive,
                          countable_full_shift, d_theta, enumerate_cylinders, full_shift,
                          golden_mean, is_admissible)
from .suspension import (FlowMeasure, Roof, abramov, flow_semicontinuity_check,
                         lift_measure, roof_integral)
from .thermodynamics import (ConstrainedPressureResult, GibbsCertificate, Potential,
                             constrained_pressure, equilibrium_gap, gibbs_certificate,
                             rpf_equilibrium, transfer_pressure)

__version__ = "0.1.0"

__all__ = [
    "EntropyEstimate", "birkhoff_concentration", "katok_estimate", "markov_entropy",
    "plugin_entropy", "simplified_formula_report", "smb_deviation", "tail_entropy_bound",
    "BudgetError", "ConfigError", "DomainError", "EntropyLabError", "InsufficientDataError",
    "InsufficientMassError", "NotIntegrableError", "NotPrimitiveError", "Bernoulli",
    "Markov", "Mixture", "PeriodicOrbit", "ProperWeight", "ShiftMeasure",
    "cylinder_log_mass", "kac_return_masses", "measure_from_json", "tightness_verdict",
    "total_mass", "vague_gap", "Alphabet", "TransitionStructure", "ball_as_cylinder",
    "check_primitive", "countable_full_shift", "d_theta", "enumerate_cylinders",
    "full_shift", "golden_mean", "is_admissible", "FlowMeasure", "Roof", "abramov",
    "flow_semicontinuity_check", "lift_measure", "roof_integral",
    "ConstrainedPressureResult", "GibbsCertificate", "Potential", "constrained_pressure",
    "equilibrium_gap", "gibbs_certificate", "rpf_equilibrium", "transfer_pressure",
]

