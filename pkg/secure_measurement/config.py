import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from state_discrimination.numerics import CHECK_TOL, DEFAULT_DIMENSION_CAP
from state_discrimination.utils import parse_complex_matrix, parse_complex_vector

from .exceptions import ConfigError

UNAMBIGUOUS = "unambiguous"


# ============================================================================
# Pydantic Models für Config-Validierung
# ============================================================================

class GroupConfig(BaseModel):
    """Z_{n_1} x ... x Z_{n_t}"""
    orders: List[int] = Field(..., min_length=1)

    @field_validator('orders')
    @classmethod
    def validate_orders(cls, v):
        if any(n < 1 for n in v):
            raise ValueError("Group orders must be positive integers")
        return v

    @property
    def order(self) -> int:
        return int(np.prod(self.orders))


class RepConfig(BaseModel):
    """
    shift: regular representation (dimension M)
    diag: diagonal representation with one character per basis vector (dimension M)
    explicit: one generator per cyclic factor, or one matrix per group element
    """
    type: Literal["shift", "diag", "explicit"] = "shift"
    matrices: Optional[List[Any]] = None

    @model_validator(mode='after')
    def check_matrices(self):
        if self.type == "explicit" and not self.matrices:
            raise ValueError("Explicit representation requires 'matrices'")
        if self.type != "explicit" and self.matrices:
            raise ValueError(f"'matrices' is only allowed for type 'explicit', not '{self.type}'")
        return self

    def parsed_matrices(self) -> List[np.ndarray]:
        return [parse_complex_matrix(m) for m in self.matrices or []]


class ToleranceOverrides(BaseModel):
    me_optimality: float = Field(default=1e-8, gt=0)
    oim_constraint: float = Field(default=1e-6, gt=0)


class SolverConfig(BaseModel):
    restarts: int = Field(default=20, ge=0)
    dominance_draws: int = Field(default=0, ge=0)


class OutputConfig(BaseModel):
    directory: str = Field(default="reports", min_length=1)


class LoggingConfig(BaseModel):
    """Logging Konfiguration"""
    level: str = Field(default="INFO")

    @field_validator('level')
    @classmethod
    def validate_level(cls, v):
        valid_levels = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of: {', '.join(valid_levels)}")
        return v.upper()


class RunConfig(BaseModel):
    """Vollständige Konfiguration eines Protokoll-Laufs"""
    group: GroupConfig
    rep: RepConfig = Field(default_factory=RepConfig)
    seed_vectors: List[Any] = Field(..., min_length=1)
    failure_prob: Union[float, Literal["unambiguous"]] = 0.0
    observers: int = Field(default=2, ge=2)
    preprocessing: Literal["entangled", "separable"] = "entangled"
    trials: int = Field(default=0, ge=0)
    rng_seed: int = Field(default=0, ge=0, lt=2 ** 64)
    tolerance: Optional[float] = Field(default=None, gt=0)
    tolerances: ToleranceOverrides = Field(default_factory=ToleranceOverrides)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    dimension_cap: Optional[int] = Field(default=None, ge=1)
    output: OutputConfig = Field(default_factory=OutputConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    @field_validator('failure_prob')
    @classmethod
    def validate_failure_prob(cls, v):
        if isinstance(v, str):
            return v
        if not 0.0 <= v <= 1.0:
            raise ValueError("failure_prob must lie in [0, 1] or be 'unambiguous'")
        return float(v)

    @field_validator('seed_vectors')
    @classmethod
    def validate_seed_vectors(cls, v):
        # Eine einzelne Zahlenliste ist ein einzelner Vektor
        if isinstance(v[0], (int, float)) and not isinstance(v[0], bool):
            v = [v]
        lengths = set()
        for vector in v:
            lengths.add(len(parse_complex_vector(vector)))
        if len(lengths) != 1:
            raise ValueError(f"Seed vectors have inconsistent lengths {sorted(lengths)}")
        return v

    @model_validator(mode='after')
    def check_consistency(self):
        if self.preprocessing == "separable" and self.observers != 2:
            raise ValueError("Separable preprocessing is defined for two observers only")

        dim = self.seed_dim
        order = self.group.order
        if self.rep.type in ("shift", "diag"):
            if dim != order:
                raise ValueError(
                    f"Representation '{self.rep.type}' has dimension {order}, seed vectors have length {dim}"
                )
        else:
            try:
                matrices = self.rep.parsed_matrices()
            except ValueError as e:
                raise ValueError(f"Invalid representation matrices: {e}") from e
            if len(matrices) not in (len(self.group.orders), order):
                raise ValueError(
                    f"Expected {len(self.group.orders)} generators or {order} matrices, got {len(matrices)}"
                )
            for m in matrices:
                if m.shape != (dim, dim):
                    raise ValueError(f"Representation matrix of shape {m.shape} does not match seed length {dim}")
        if self.rank > dim:
            raise ValueError(f"{self.rank} seed vectors cannot be independent in dimension {dim}")
        return self

    @property
    def seed_dim(self) -> int:
        return len(parse_complex_vector(self.seed_vectors[0]))

    @property
    def rank(self) -> int:
        return len(self.seed_vectors)

    def seed_matrix(self) -> np.ndarray:
        """D x R matrix with the seed vectors as columns."""
        return np.column_stack([parse_complex_vector(v) for v in self.seed_vectors])


# ============================================================================
# Umgebungs-Overrides
# ============================================================================

@dataclass
class ProtocolSettings:
    """Numerische Einstellungen, die nicht pro Lauf konfiguriert sein müssen"""
    dimension_cap: int = DEFAULT_DIMENSION_CAP
    tolerance: float = CHECK_TOL

    @classmethod
    def from_env(cls) -> 'ProtocolSettings':
        """Erstellt Einstellungen aus Umgebungsvariablen"""
        try:
            return cls(
                dimension_cap=int(os.getenv('SECMEAS_DIMENSION_CAP', str(DEFAULT_DIMENSION_CAP))),
                tolerance=float(os.getenv('SECMEAS_TOLERANCE', str(CHECK_TOL)))
            )
        except ValueError as e:
            raise ConfigError(f"Invalid SECMEAS_* environment value: {e}") from e

    @classmethod
    def resolve(cls, config: RunConfig) -> 'ProtocolSettings':
        """Config-Werte haben Vorrang vor der Umgebung"""
        env = cls.from_env()
        return cls(
            dimension_cap=config.dimension_cap or env.dimension_cap,
            tolerance=config.tolerance or env.tolerance
        )


# ============================================================================
# Config-Management
# ============================================================================

def substitute_env_vars(config_dict: Dict[str, Any]) -> Dict[str, Any]:
    """
    Substituiert Umgebungsvariablen in Config-Werten.
    Format: ${VAR_NAME} wird durch os.getenv('VAR_NAME') ersetzt.
    """
    def substitute_value(value):
        if isinstance(value, str):
            pattern = r'\$\{([^}]+)\}'
            matches = re.findall(pattern, value)

            for var_name in matches:
                env_value = os.getenv(var_name)
                if env_value is None:
                    raise ConfigError(f"Environment variable '{var_name}' not found")
                value = value.replace(f'${{{var_name}}}', env_value)

            # Vollständig ersetzte Zahlen wieder als Zahlen lesen
            if matches:
                try:
                    return yaml.safe_load(value)
                except yaml.YAMLError:
                    return value
            return value
        elif isinstance(value, dict):
            return {k: substitute_value(v) for k, v in value.items()}
        elif isinstance(value, list):
            return [substitute_value(item) for item in value]
        else:
            return value

    return substitute_value(config_dict)


def parse_config(config_dict: Dict[str, Any]) -> RunConfig:
    """
    Validiert ein bereits geladenes Config-Dictionary.

    Raises:
        ConfigError: Mit einer Zeile pro fehlerhaftem Feld
    """
    if not isinstance(config_dict, dict):
        raise ConfigError("Configuration must be a mapping at the top level")
    try:
        return RunConfig(**config_dict)
    except ValidationError as e:
        error_msg = "Configuration validation failed:\n"
        for error in e.errors():
            field = ' -> '.join(str(x) for x in error['loc']) or 'config'
            error_msg += f"  - {field}: {error['msg']}\n"
        raise ConfigError(error_msg)


def load_config(config_path: Path) -> RunConfig:
    """
    Lädt und validiert die Konfiguration aus einer YAML- oder JSON-Datei.

    Args:
        config_path: Pfad zur Config-Datei

    Returns:
        Validiertes RunConfig-Objekt

    Raises:
        FileNotFoundError: Wenn Config-Datei nicht existiert
        ConfigError: Wenn Config ungültig ist oder Umgebungsvariablen fehlen
    """
    config_path = Path(config_path)
    if not config_path.exists():
        raise FileNotFoundError(
            f"Config file not found: {config_path}\n"
            f"Please copy config_example.yaml to config.yaml and adjust the values."
        )

    # YAML laden (JSON ist eine Teilmenge)
    try:
        with open(config_path) as f:
            config_dict = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Could not parse {config_path}: {e}") from e

    config_dict = substitute_env_vars(config_dict)
    return parse_config(config_dict)
