"""spillkit: panel econometrics toolkit for spillover connectedness studies.

Stationarity tests, rolling OLS, VAR with Granger causality, Johansen
cointegration and quantile-VAR connectedness over multi-country annual
panels, plus seeded synthetic processes that give every estimator an exact
ground truth.
"""

from .panel import (
    CsvSchema,
    DescriptiveStats,
    Panel,
    PanelSlice,
    RoleTag,
    Series,
    VariableRole,
    describe,
    difference,
    load_csv,
    log_transform,
    offset_transform,
    replay,
)
from .regression import (
    ModelSpec,
    OlsFit,
    QuantileFit,
    RQ_MODELS,
    RollingResult,
    ols_fit,
    pinball_loss,
    quantile_fit,
    rolling_ols,
    rolling_table,
)
from .stationarity import (
    StationarityVerdict,
    TestReport,
    adf_test,
    classify,
    kpss_test,
    verdict_label,
)
from .varmodel import (
    LagSelection,
    RmsReport,
    VarFit,
    fit_var,
    granger_test,
    irf,
    jarque_bera,
    model_rms,
    select_lag,
)
from .cointegration import (
    JohansenResult,
    PairResult,
    TRACE_CRITICAL_VALUES,
    johansen_trace,
    pairwise_grid,
)
from .connectedness import (
    ConnectednessReport,
    GfevdTable,
    QvarEntry,
    QvarFit,
    SweepResult,
    SweepRow,
    WindowedReport,
    connectedness_report,
    default_theta_grid,
    fit_qvar,
    fit_qvar_grid,
    gfevd,
    gfevd_from_coefficients,
    npdc_node_link_json,
    npdc_to_dot,
    npdc_to_node_link,
    quantile_sweep,
    rolling_connectedness,
    structural_quantile_irf,
    validate_theta_grid,
)
from .synth import ProcessSpec, example_panel, simulate, true_gfevd
from . import errors

__version__ = "0.1.0"
