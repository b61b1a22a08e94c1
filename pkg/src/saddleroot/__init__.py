"""Higher-order tail approximations for signed likelihood roots."""

from .approx import (
    FORMATS,
    PValuePair,
    SingularityPolicy,
    TailInput,
    assemble_pvalues,
    bn_format,
    guarded_pvalue,
    lr_format,
    std_normal_cdf,
)
from .expratio import EXP_RATIO, ExpRatioModel, ExpRatioParams, PairedSample
from .inference import (
    ROWS,
    Model,
    ModelFit,
    ParamPoint,
    coxreid_Rbar,
    coxreid_Tbar,
    diciccio_T,
    fit_model,
    pvalue_suite,
    severini_U,
    signed_root_R,
    upper_confidence_limit,
)
from .mcsim import SimConfig, SimReport, run_simulation

__version__ = "0.1.0"
