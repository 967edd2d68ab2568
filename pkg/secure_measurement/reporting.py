import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
from pydantic import BaseModel, Field

from .exceptions import ReportError

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
PROBABILITIES_FILE = "probabilities.csv"
MONTE_CARLO_FILE = "monte_carlo.csv"
SCHEMA_FILE = "report_schema.json"


# ============================================================================
# Report-Modelle
# ============================================================================

class ResidualEntry(BaseModel):
    value: float
    tolerance: float
    passed: bool

    @classmethod
    def check(cls, value: float, tolerance: float) -> "ResidualEntry":
        return cls(value=float(value), tolerance=float(tolerance), passed=bool(value <= tolerance))


class ExactSection(BaseModel):
    """Exact receiver statistics; rows follow the group enumeration, columns add "?" last."""
    messages: List[str]
    outcomes: List[str]
    probabilities: List[List[float]]
    avg_correct: float
    avg_failure: float
    failure_target: float
    unamb_threshold: Optional[float] = None
    me_correct: float
    oim_method: str
    me_method: str
    failure_spectrum: List[float]


class MonteCarloEntry(BaseModel):
    message: str
    counts: List[int]
    frequencies: List[float]
    standard_errors: List[float]
    exact: List[float]
    tv_distance: float
    max_sigma_deviation: Optional[float] = None


class MonteCarloSection(BaseModel):
    trials: int = 0
    entries: List[MonteCarloEntry] = Field(default_factory=list)


class AttackEntry(BaseModel):
    subset: List[int]
    strategy: str
    exact_tv: float
    empirical_tv: Optional[float] = None
    trials: int = 0


class MetaSection(BaseModel):
    version: str
    numpy_version: str
    scipy_version: str
    rng_algorithm: str
    rng_seed: int
    group_orders: List[int]
    dimension: int
    rank: int
    observers: int
    preprocessing: str
    local_dim: int
    composite_dim: int


class RunReport(BaseModel):
    exact: ExactSection
    monte_carlo: MonteCarloSection = Field(default_factory=MonteCarloSection)
    attack: List[AttackEntry] = Field(default_factory=list)
    residuals: Dict[str, ResidualEntry]
    meta: MetaSection

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.residuals.values())

    def failing(self) -> List[str]:
        return [name for name, r in self.residuals.items() if not r.passed]


# ============================================================================
# Export
# ============================================================================

class ReportExporter:
    def __init__(self, report: RunReport):
        self.report = report

    def create_probability_frame(self) -> pd.DataFrame:
        exact = self.report.exact
        df = pd.DataFrame(exact.probabilities, columns=exact.outcomes)
        df.insert(0, 'message', exact.messages)
        return df

    def create_monte_carlo_frame(self) -> pd.DataFrame:
        outcomes = self.report.exact.outcomes
        data = []
        for entry in self.report.monte_carlo.entries:
            for i, outcome in enumerate(outcomes):
                data.append({
                    'message': entry.message,
                    'outcome': outcome,
                    'count': entry.counts[i],
                    'frequency': entry.frequencies[i],
                    'standard_error': entry.standard_errors[i],
                    'exact': entry.exact[i]
                })
        return pd.DataFrame(data, columns=['message', 'outcome', 'count', 'frequency', 'standard_error', 'exact'])

    def export_to_csv(self, df: pd.DataFrame, filename: str, directory: Union[str, Path] = "reports") -> str:
        filepath = self._prepare(filename, directory)
        try:
            df.to_csv(filepath, index=False, float_format='%.15g')
        except OSError as e:
            raise ReportError(filepath, str(e)) from e
        return str(filepath)

    def export_to_json(self, data: Any, filename: str, directory: Union[str, Path] = "reports") -> str:
        filepath = self._prepare(filename, directory)
        try:
            with open(filepath, 'w', encoding='utf-8') as jsonfile:
                json.dump(data, jsonfile, indent=2, ensure_ascii=False)
                jsonfile.write('\n')
        except OSError as e:
            raise ReportError(filepath, str(e)) from e
        return str(filepath)

    def _prepare(self, filename: str, directory: Union[str, Path]) -> Path:
        try:
            Path(directory).mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ReportError(directory, f"cannot create directory: {e}") from e
        return Path(directory) / filename

    def export_all(self, directory: Union[str, Path]) -> Dict[str, str]:
        paths = {
            'report': self.export_to_json(self.report.model_dump(mode='json'), REPORT_FILE, directory),
            'probabilities': self.export_to_csv(self.create_probability_frame(), PROBABILITIES_FILE, directory),
            'monte_carlo': self.export_to_csv(self.create_monte_carlo_frame(), MONTE_CARLO_FILE, directory),
            'schema': self.export_to_json(RunReport.model_json_schema(), SCHEMA_FILE, directory)
        }
        logger.info(f"Report written to {directory}")
        return paths


def emit_report(report: RunReport, directory: Union[str, Path]) -> Dict[str, str]:
    """
    Writes report.json, probabilities.csv, monte_carlo.csv and report_schema.json.

    Raises:
        ReportError: Directory or file not writable
    """
    return ReportExporter(report).export_all(directory)


def load_report(path: Union[str, Path]) -> RunReport:
    path = Path(path)
    try:
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        raise ReportError(path, str(e)) from e
    except json.JSONDecodeError as e:
        raise ReportError(path, f"invalid JSON: {e}") from e
    return RunReport.model_validate(data)
