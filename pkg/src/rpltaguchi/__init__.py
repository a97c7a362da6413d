"""Orthogonal-array experiment toolkit with a trickle-paced network simulator.

The analysis core (arrays, designs, SNR, ANOVA, response tables, the
estimator facade) imports eagerly.  Simulator names are re-exported
lazily so that everything else, including ``verify-paper``, keeps working
in a build without the simulator module.
"""

from ._version import __version__
from .anova import (
    AnovaTable,
    anova,
    error_sum_squares,
    f_p_value,
    f_value,
    factor_sum_squares,
    percent_contribution,
    total_sum_squares,
)
from .arrays import (
    L9,
    L27,
    BalanceReport,
    OrthogonalArray,
    STANDARD_CATALOG,
    get_array,
    min_runs,
    select_array,
    verify_orthogonality,
)
from .design import DesignMatrix, DesignPoint, Factor, read_response_csv, write_response_csv
from .estimator import TaguchiAnalysis, design_from_level_values
from .exceptions import (
    AccountingError,
    ConfigError,
    DecompositionError,
    DomainError,
    ExperimentSpecError,
    InvalidDesignError,
    InvalidInputError,
    InvariantViolationError,
    NoFeasibleArrayError,
    RplTaguchiError,
    SaturatedDesignError,
    UndefinedContributionError,
    UnknownFactorError,
)
from .experiment import (
    ExperimentSpec,
    RunRecord,
    expand_design,
    parse_spec,
    records_from_design,
    run_experiment,
)
from .report import Report, VerificationReport, analyze, export, load_report, verify_paper
from .snr import (
    SnrVector,
    snr_larger_better,
    snr_nominal_best,
    snr_smaller_better,
    snr_vector,
)
from .tables import EffectsData, ResponseTable, effects, response_table
from .trickle import TrickleParams, TrickleTimer, i_max_of, i_min_of

_SIM_EXPORTS = {
    "DioMessage",
    "PowerBreakdown",
    "PowerModel",
    "SimConfig",
    "SimResult",
    "Simulation",
    "account_power",
    "mobility_step",
    "run",
}


def __getattr__(name):
    if name in _SIM_EXPORTS:
        from . import sim

        return getattr(sim, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | _SIM_EXPORTS)
