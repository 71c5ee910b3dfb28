"""thermoshift: non-additive thermodynamic formalism on subshifts of finite type.

The package computes topological pressure along three independent routes,
builds and certifies Gibbs and weak Gibbs measures on mixing shifts, verifies
that cylinder log-masses of a Gibbs measure form an almost additive sequence
with vanishing pressure, and estimates pointwise-dimension spectra for
expanding piecewise-monotone interval maps with Markov structure.  Everything
is exact-arithmetic-first: enumeration where feasible, certified tolerances
where not.
"""

from .sft import (
    NotMixingError,
    SymbolicPoint,
    TransitionSystem,
    cyclic_mask,
    enumerate_cyclic_words,
    enumerate_periodic_points,
    enumerate_words,
    metric_distance,
    periodic_point,
    representative_point,
    word_array,
)
from .potentials import (
    AdditiveSequence,
    ExplicitSequence,
    InexactSequenceError,
    LocallyConstantPotential,
    PotentialSequence,
    almost_additivity_defect,
    asymptotic_defect,
    birkhoff_sum,
    eta,
    gamma,
    tempered_variation_report,
    variation,
)
from .pressure import (
    EigensolverError,
    FamilyBracketReport,
    PressureEstimate,
    block_transfer,
    family_pressure_bracket,
    log_sum_exp,
    power_iteration,
    pressure_cylinder,
    pressure_limit,
    pressure_periodic,
    pressure_spectral,
)
from .measures import (
    MarkovMeasure,
    OracleValidation,
    RpfGibbsData,
    TableMeasure,
    VariationalReport,
    WeakGibbsCertificate,
    ZeroCylinderMassError,
    atomfree_check,
    build_rpf,
    certify_weak_gibbs,
    entropy,
    integrate,
    oscillation_bound,
    shift_invariance_gap,
    validate_oracle,
    variational_principle_report,
)
from .log_mass import (
    AlmostAdditivityReport,
    AsymptoticAdditivityReport,
    GibbsOneReport,
    LogMassSequence,
    PressureZeroReport,
    SandwichReport,
    build_log_mass_sequence,
    check_almost_additivity,
    check_asymptotic_additivity,
    check_gibbs_one,
    check_pressure_zero,
    check_sandwich,
)
from .interval_maps import (
    CylinderInterval,
    ExpandingMarkovMap,
    InverseBranchError,
    PointwiseDimensionReport,
    UjrReport,
    check_ujr,
    doubling_map,
    full_branch_linear,
    golden_mean_linear,
    perturbed_doubling,
    pointwise_dimension_estimates,
)
from .multifractal import (
    CandidateFamily,
    CrosscheckReport,
    SpectrumCurve,
    VariationalSpectrumPoint,
    bernoulli_candidate_family,
    legendre_alpha_range,
    legendre_f_at_alpha,
    markov_candidate_family,
    spectrum_crosscheck,
    spectrum_legendre_bernoulli,
    spectrum_variational,
)
from .documents import (
    DocumentError,
    dump_map,
    dump_measure,
    dump_potential,
    dump_system,
    load_config,
    load_map,
    load_measure,
    load_potential,
    load_system,
)

__version__ = "0.1.0"

__all__ = [
    "AdditiveSequence",
    "AlmostAdditivityReport",
    "AsymptoticAdditivityReport",
    "CandidateFamily",
    "CrosscheckReport",
    "CylinderInterval",
    "DocumentError",
    "EigensolverError",
    "ExpandingMarkovMap",
    "ExplicitSequence",
    "FamilyBracketReport",
    "GibbsOneReport",
    "InexactSequenceError",
    "InverseBranchError",
    "LocallyConstantPotential",
    "LogMassSequence",
    "MarkovMeasure",
    "NotMixingError",
    "OracleValidation",
    "PointwiseDimensionReport",
    "PotentialSequence",
    "PressureEstimate",
    "PressureZeroReport",
    "RpfGibbsData",
    "SandwichReport",
    "SpectrumCurve",
    "SymbolicPoint",
    "TableMeasure",
    "TransitionSystem",
    "UjrReport",
    "VariationalReport",
    "VariationalSpectrumPoint",
    "WeakGibbsCertificate",
    "ZeroCylinderMassError",
    "almost_additivity_defect",
    "asymptotic_defect",
    "atomfree_check",
    "bernoulli_candidate_family",
    "birkhoff_sum",
    "block_transfer",
    "build_log_mass_sequence",
    "build_rpf",
    "certify_weak_gibbs",
    "check_almost_additivity",
    "check_asymptotic_additivity",
    "check_gibbs_one",
    "check_pressure_zero",
    "check_sandwich",
    "check_ujr",
    "cyclic_mask",
    "doubling_map",
    "dump_map",
    "dump_measure",
    "dump_potential",
    "dump_system",
    "entropy",
    "enumerate_cyclic_words",
    "enumerate_periodic_points",
    "enumerate_words",
    "eta",
    "family_pressure_bracket",
    "full_branch_linear",
    "gamma",
    "golden_mean_linear",
    "integrate",
    "legendre_alpha_range",
    "legendre_f_at_alpha",
    "load_config",
    "load_map",
    "load_measure",
    "load_potential",
    "load_system",
    "log_sum_exp",
    "markov_candidate_family",
    "metric_distance",
    "oscillation_bound",
    "periodic_point",
    "pointwise_dimension_estimates",
    "power_iteration",
    "pressure_cylinder",
    "pressure_limit",
    "pressure_periodic",
    "pressure_spectral",
    "representative_point",
    "shift_invariance_gap",
    "spectrum_crosscheck",
    "spectrum_legendre_bernoulli",
    "spectrum_variational",
    "tempered_variation_report",
    "validate_oracle",
    "variation",
    "variational_principle_report",
    "word_array",
]
