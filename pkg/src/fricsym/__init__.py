"""fricsym: interpretable symbolic friction-torque models for robot joints.

Identify closed-form friction laws from torque/velocity logs with a
genetic-programming engine and a continuous sparse-structure engine, measure
them against Stribeck-curve baselines, and reuse them for residual
adaptation and external-torque estimation.
"""
from ._version import __version__
from .errors import FitError, InputError, MismatchError
from .expr import (
    ArityError,
    Binary,
    Const,
    Expr,
    FunctionSet,
    ParseError,
    Unary,
    Var,
    complexity,
    evaluate,
    format_expr,
    from_json,
    parse,
    simplify,
    to_json,
)
from .numopt import (
    BasinHoppingConfig,
    BasinHoppingResult,
    Objective,
    basin_hopping,
    fit_least_squares,
    local_minimize,
)
from .baseline import (
    AsymmetricStribeck,
    BaselineFitConfig,
    StribeckParams,
    asymmetric_eval,
    asymmetric_template_complexity,
    fit_asymmetric,
    fit_symmetric,
    stribeck_eval,
    stribeck_expr,
    stribeck_template_expr,
)
from .gp import GpConfig, ParetoArchive, evolve
from .parfam import (
    ParFamFitConfig,
    ParFamStructure,
    RationalSpec,
    default_friction_structure,
    parfam_eval,
    parfam_extract,
    parfam_fit,
)
from .data import (
    ADAPT_FEATURES,
    FEATURES,
    FrictionPoint,
    JointDataset,
    JointSample,
    Segment,
    SynthSpec,
    build_points,
    design_matrix,
    friction_target,
    load_csv,
    save_csv,
    segment_constant_velocity,
    split_movements,
    synth_generate,
)
from .models import (
    AsymmetricStribeckModel,
    CombinedModel,
    ExprModel,
    SymmetricStribeckModel,
    adapt_residual,
    external_torque,
    load_model,
    model_from_dict,
    save_model,
)

__all__ = [
    "__version__",
    # errors
    "FitError", "InputError", "MismatchError", "ParseError", "ArityError",
    # expressions
    "Expr", "Const", "Var", "Unary", "Binary", "FunctionSet",
    "evaluate", "complexity", "simplify", "parse", "format_expr",
    "to_json", "from_json",
    # optimization
    "Objective", "local_minimize", "basin_hopping", "fit_least_squares",
    "BasinHoppingConfig", "BasinHoppingResult",
    # baselines
    "StribeckParams", "AsymmetricStribeck", "BaselineFitConfig",
    "stribeck_eval", "asymmetric_eval", "stribeck_expr",
    "stribeck_template_expr", "asymmetric_template_complexity",
    "fit_symmetric", "fit_asymmetric",
    # engines
    "GpConfig", "ParetoArchive", "evolve",
    "ParFamStructure", "RationalSpec", "ParFamFitConfig",
    "default_friction_structure", "parfam_eval", "parfam_fit",
    "parfam_extract",
    # data
    "FEATURES", "ADAPT_FEATURES", "JointSample", "JointDataset",
    "FrictionPoint", "Segment", "SynthSpec",
    "friction_target", "design_matrix", "build_points",
    "segment_constant_velocity", "split_movements", "synth_generate",
    "load_csv", "save_csv",
    # models
    "ExprModel", "SymmetricStribeckModel", "AsymmetricStribeckModel",
    "CombinedModel", "adapt_residual", "external_torque",
    "model_from_dict", "save_model", "load_model",
]
