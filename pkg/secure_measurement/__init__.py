from .config import ProtocolSettings, RunConfig, load_config, parse_config
from .exceptions import ConfigError, ProtocolError, ReportError
from .pipeline import SecureMeasurementPipeline, create_state_set, run_pipeline
from .preprocessing import (
    LocalFrame,
    PreprocessMap,
    build_bipartite_entangled,
    build_bipartite_separable,
    build_multipartite,
    eta_vector,
    eta_vector_rewritten,
    preprocess,
    separable_product_form,
)
from .receiver import Decoded, ReceiverPovm, decode, receiver_povm
from .reporting import ReportExporter, RunReport, emit_report, load_report
from .simulation import AttackResult, MonteCarloResult, attack_sim, monte_carlo
from .verification import baseline_states, check_equivalence, check_secrecy

__version__ = "1.0.0"
__all__ = [
    "RunConfig",
    "ProtocolSettings",
    "load_config",
    "parse_config",
    "ProtocolError",
    "ConfigError",
    "ReportError",
    "SecureMeasurementPipeline",
    "create_state_set",
    "run_pipeline",
    "LocalFrame",
    "PreprocessMap",
    "build_bipartite_entangled",
    "build_bipartite_separable",
    "build_multipartite",
    "eta_vector",
    "eta_vector_rewritten",
    "preprocess",
    "separable_product_form",
    "Decoded",
    "ReceiverPovm",
    "decode",
    "receiver_povm",
    "RunReport",
    "ReportExporter",
    "emit_report",
    "load_report",
    "MonteCarloResult",
    "AttackResult",
    "monte_carlo",
    "attack_sim",
    "check_secrecy",
    "check_equivalence",
    "baseline_states"
]
