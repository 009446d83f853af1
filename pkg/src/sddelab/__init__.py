"""Numerical laboratory for blow-up and extinction in delay SDEs.

The package simulates scalar stochastic (delay) differential equations with
explicit stopping detection — threshold-ladder blow-up certificates,
extinction barriers, horizon censoring — plus the surrounding experiment
toolkit: pathwise comparison sandwiches, smooth state-space transforms,
time-change diagnostics, and reproducible Monte Carlo estimates.
"""

from __future__ import annotations

from .catalog import MODEL_NAMES, catalog, get_model
from .comparison import (
    NoUniformBoundError,
    SandwichReport,
    bound_constants,
    coupled_sandwich,
    write_sandwich_csv,
)
from .modulus import ModulusReport, osgood_divergent, validate_modulus
from .montecarlo import (
    BlowUpBefore,
    EquivalenceResult,
    ExplosionHistogram,
    Extinguished,
    MCReport,
    SddeEventRunner,
    SdeEventRunner,
    collect_events,
    config_fingerprint,
    dichotomy_experiment,
    equivalence_experiment,
    estimate_event,
    explosion_histogram,
    report_from_events,
    wilson_interval,
    write_histogram_csv,
)
from .noise import NoiseSource
from .sde import (
    DEFAULT_LADDER,
    IntegratorConfig,
    SdeProblem,
    blow_up_certificate,
    freeze_delay,
    simulate_sde,
    write_trajectory_csv,
)
from .sdde import (
    HistoryBuffer,
    build_initial_from_constant,
    build_initial_from_path,
    simulate_sdde,
)
from .timechange import (
    TimeChangeDiagnostics,
    diagnose_time_change,
    ks_critical_value,
    write_diagnostics_csv,
)
from .transform import (
    DomainError,
    SmoothMap,
    TransformConsistency,
    exp_neg_map,
    identity_map,
    neg_log_map,
    pathwise_consistency,
    push_coefficients,
    run_transform_pair,
    transformed_config,
    transformed_problem,
)
from .types import (
    EventKind,
    Fault,
    IntegrationFaultError,
    ModelSpec,
    ModulusFamily,
    ModulusUndecidableError,
    PathResult,
    Segment,
    StoppingEvent,
)

__version__ = "0.1.0"

__all__ = [
    "BlowUpBefore",
    "DEFAULT_LADDER",
    "DomainError",
    "EquivalenceResult",
    "EventKind",
    "ExplosionHistogram",
    "Extinguished",
    "Fault",
    "HistoryBuffer",
    "IntegrationFaultError",
    "IntegratorConfig",
    "MCReport",
    "MODEL_NAMES",
    "ModelSpec",
    "ModulusFamily",
    "ModulusReport",
    "ModulusUndecidableError",
    "NoUniformBoundError",
    "NoiseSource",
    "PathResult",
    "SandwichReport",
    "SddeEventRunner",
    "SdeEventRunner",
    "SdeProblem",
    "Segment",
    "SmoothMap",
    "StoppingEvent",
    "TimeChangeDiagnostics",
    "TransformConsistency",
    "blow_up_certificate",
    "bound_constants",
    "build_initial_from_constant",
    "build_initial_from_path",
    "catalog",
    "collect_events",
    "config_fingerprint",
    "coupled_sandwich",
    "diagnose_time_change",
    "dichotomy_experiment",
    "equivalence_experiment",
    "estimate_event",
    "explosion_histogram",
    "exp_neg_map",
    "freeze_delay",
    "get_model",
    "identity_map",
    "ks_critical_value",
    "neg_log_map",
    "osgood_divergent",
    "pathwise_consistency",
    "push_coefficients",
    "report_from_events",
    "run_transform_pair",
    "simulate_sde",
    "simulate_sdde",
    "transformed_config",
    "transformed_problem",
    "validate_modulus",
    "wilson_interval",
    "write_diagnostics_csv",
    "write_histogram_csv",
    "write_sandwich_csv",
    "write_trajectory_csv",
    "__version__",
]
