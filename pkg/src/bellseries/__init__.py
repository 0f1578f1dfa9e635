"""Time-series analysis of Bell experiments: reordering, condensation and
counterfactual completion of outcome tables."""

from bellseries.table_model import (
    ALPHA,
    ALPHA_P,
    BETA,
    BETA_P,
    QUARTERS,
    ROWS,
    CompleteTable,
    CondensedTable,
    QuarterProfile,
    RunTable,
    SettingLabels,
    SettingSchedule,
    SicaReport,
    TableError,
    check_sica_condition,
    condense,
    new_run_table,
    normalize_schedule,
    quarter_profile,
)
from bellseries.estimators import (
    ChResult,
    ChshResult,
    CorrelationEstimate,
    EfficiencyReport,
    ch_j,
    ch_terms_condensed,
    chsh,
    chsh_condensed,
    correlation,
    efficiency,
    efficiency_bound_ratio,
    to_ch_encoding,
)
from bellseries.reorder import (
    JointAssignment,
    ReorderOutcome,
    brute_force_feasibility,
    feasibility,
    realize_permutations,
)
from bellseries.completion import (
    FreeChoice,
    complete_table,
    enumerate_completions,
    resample_schedule,
)
from bellseries.simulator import (
    DetectionChannel,
    LhvModel,
    QmModel,
    expected_correlation,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHA",
    "ALPHA_P",
    "BETA",
    "BETA_P",
    "QUARTERS",
    "ROWS",
    "CompleteTable",
    "CondensedTable",
    "QuarterProfile",
    "RunTable",
    "SettingLabels",
    "SettingSchedule",
    "SicaReport",
    "TableError",
    "check_sica_condition",
    "condense",
    "new_run_table",
    "normalize_schedule",
    "quarter_profile",
    "ChResult",
    "ChshResult",
    "CorrelationEstimate",
    "EfficiencyReport",
    "ch_j",
    "ch_terms_condensed",
    "chsh",
    "chsh_condensed",
    "correlation",
    "efficiency",
    "efficiency_bound_ratio",
    "to_ch_encoding",
    "JointAssignment",
    "ReorderOutcome",
    "brute_force_feasibility",
    "feasibility",
    "realize_permutations",
    "FreeChoice",
    "complete_table",
    "enumerate_completions",
    "resample_schedule",
    "DetectionChannel",
    "LhvModel",
    "QmModel",
    "expected_correlation",
    "simulate",
]
