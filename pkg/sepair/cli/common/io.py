import csv
import io
import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from sepair.common.exceptions import InputFormatError
from sepair.operators.cstar_modules.models import (
    ConcordanceVerdict,
    FiniteCStarAlgebra,
    IntersectionLocalizationVerdict,
    ModuleVector,
    StandardModule,
    State,
    Submodule,
)
from sepair.operators.cstar_modules.tools import submodule_closure
from sepair.operators.hilbert_core.models import Subspace, Tolerance
from sepair.operators.hilbert_core.tools import range_space
from sepair.operators.idempotents.models import MPFormulaReport
from sepair.operators.subspace_pairs.models import PairReport, SampledRatios
from shared.logger_setup import get_logger
from shared.utils import ComplexMatrix

logger = get_logger(__name__)

OutputFormat = Literal["json", "csv", "text"]


class PairFile(BaseModel):
    """Two subspaces of C^d, each given by a generator matrix whose columns span it."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    H: ComplexMatrix
    K: ComplexMatrix

    @model_validator(mode="after")
    def check_ambient(self):
        if self.H.shape[0] != self.K.shape[0]:
            raise ValueError(f"H lives in C^{self.H.shape[0]}, K in C^{self.K.shape[0]}")
        return self


class AlgebraSpec(BaseModel):
    blocks: list[int] = Field(min_length=1)


class ModuleFile(BaseModel):
    """
    A standard module A^m with named submodules.

    Each generator is a list of coordinates, each coordinate a list of
    block matrices in matrix interchange format.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    algebra: AlgebraSpec
    m: int = Field(ge=1)
    submodules: dict[str, list[list[list[ComplexMatrix]]]] = {}

    @model_validator(mode="after")
    def check_generators(self):
        expected = [(n, n) for n in self.algebra.blocks]
        for name, generators in self.submodules.items():
            for g, generator in enumerate(generators):
                if len(generator) != self.m:
                    raise ValueError(f"{name}[{g}] has {len(generator)} coordinates, expected {self.m}")
                for coordinate in generator:
                    if [block.shape for block in coordinate] != expected:
                        raise ValueError(f"{name}[{g}] has blocks of the wrong shape, expected {expected}")
        return self

    @property
    def module(self) -> StandardModule:
        return StandardModule(algebra=FiniteCStarAlgebra(block_dims=self.algebra.blocks), m=self.m)

    def generators(self, name: str) -> list[ModuleVector]:
        if name not in self.submodules:
            raise InputFormatError(f"No submodule named {name!r}; available: {sorted(self.submodules)}")
        algebra = self.module.algebra
        return [
            ModuleVector(coords=[algebra.element(coordinate) for coordinate in generator])
            for generator in self.submodules[name]
        ]


class StatesFile(BaseModel):
    states: list[State] = Field(min_length=1)


class SeparationSummary(BaseModel):
    report: PairReport
    sampled: Optional[SampledRatios] = None


class PinvSummary(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    reports: list[MPFormulaReport]


class LocalizationEntry(BaseModel):
    state_index: int = Field(ge=0)
    dim: int = Field(ge=0, description="dim E_f")
    null_space_dim: int = Field(ge=0)
    submodule_dims: dict[str, int] = Field(default_factory=dict, description="dim H_f per named submodule")
    complement_equal: dict[str, bool] = Field(default_factory=dict, description="(H_f)⊥ = (H⊥)_f per named submodule")


class LocalizationSummary(BaseModel):
    module_dim: int = Field(ge=1)
    entries: list[LocalizationEntry]


class ConcordanceSummary(BaseModel):
    concordance: ConcordanceVerdict
    intersection: IntersectionLocalizationVerdict

    @property
    def agrees(self) -> bool:
        return self.concordance.agrees


def _read_json(path: Path) -> object:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        logger.error(f"Cannot read {path}: {e}")
        raise InputFormatError(f"Cannot read {path}: {e}") from e


def _parse(model: type[BaseModel], path: Path) -> BaseModel:
    try:
        return model.model_validate(_read_json(path))
    except ValidationError as e:
        logger.error(f"Invalid {model.__name__} in {path}: {e.error_count()} errors")
        raise InputFormatError(f"Invalid {model.__name__} in {path}:\n{e}") from e


def load_pair(path: Path, tol: Tolerance) -> tuple[Subspace, Subspace]:
    pair = _parse(PairFile, path)
    return range_space(pair.H, tol), range_space(pair.K, tol)


def load_module(path: Path) -> ModuleFile:
    return _parse(ModuleFile, path)


def load_submodule(description: ModuleFile, name: str, tol: Tolerance) -> Submodule:
    return submodule_closure(description.module, description.generators(name), tol)


def load_states(path: Path) -> list[State]:
    return _parse(StatesFile, path).states


def flatten_dump(data: dict, prefix: str = "") -> list[tuple[str, object]]:
    """Flatten nested dumps into dotted keys; lists of scalars are kept as JSON text."""
    items = []
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            items.extend(flatten_dump(value, f"{name}."))
        elif isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
            items.extend(
                flatten_dump({str(i): v for i, v in enumerate(value)}, f"{name}.")
                if all(isinstance(v, dict) for v in value)
                else [(name, json.dumps(value))]
            )
        elif isinstance(value, list):
            items.append((name, json.dumps(value)))
        else:
            items.append((name, value))
    return items


def rows_to_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    fieldnames = list(dict.fromkeys(key for row in rows for key in row))
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def render(report: BaseModel, output_format: OutputFormat, rows: Optional[list[dict]] = None) -> str:
    """Serialize a report; csv uses `rows` when given, else one flattened row."""
    if output_format == "json":
        return report.model_dump_json(indent=2, by_alias=True)
    items = flatten_dump(report.model_dump(mode="json", by_alias=True))
    if output_format == "csv":
        return rows_to_csv(rows if rows is not None else [dict(items)])
    return "\n".join(f"{key}: {value}" for key, value in items)


def write_text(path: Path, text: str) -> None:
    Path(path).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
