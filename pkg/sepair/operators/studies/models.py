from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

StudyName = Literal["shift", "ct", "cx"]


class SweepEntry(BaseModel):
    """One grid size of a study."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2)
    c0: float = Field(ge=0, le=1, description="Dixmier cosine of the pair the study is about")
    sigma_min: float = Field(gt=0, description="Smallest positive singular value of the operator the study tracks")
    verdicts: dict[str, bool] = Field(default_factory=dict)
    metrics: dict[str, float] = Field(default_factory=dict)
    deviations: list[str] = Field(default_factory=list, description="Where the grid differs from the continuum")


class SweepReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    example: StudyName
    n_values: list[int]
    c0_values: list[float]
    sigma_min_values: list[float]
    verdicts: list[dict[str, bool]]
    metrics: list[dict[str, float]]
    deviations: list[str] = []

    @model_validator(mode="after")
    def check_columns(self):
        lengths = {
            len(self.n_values),
            len(self.c0_values),
            len(self.sigma_min_values),
            len(self.verdicts),
            len(self.metrics),
        }
        if len(lengths) != 1:
            raise ValueError("Sweep columns must share one length")
        if any(s <= 0 for s in self.sigma_min_values):
            raise ValueError("sigma_min values must be positive")
        if self.n_values != sorted(set(self.n_values)):
            raise ValueError("n values must be distinct and ascending")
        return self

    @classmethod
    def from_entries(cls, example: StudyName, entries: list[SweepEntry]) -> "SweepReport":
        entries = sorted(entries, key=lambda entry: entry.n)
        deviations = []
        for entry in entries:
            deviations.extend(f"n={entry.n}: {note}" for note in entry.deviations)
        return cls(
            example=example,
            n_values=[entry.n for entry in entries],
            c0_values=[entry.c0 for entry in entries],
            sigma_min_values=[entry.sigma_min for entry in entries],
            verdicts=[entry.verdicts for entry in entries],
            metrics=[entry.metrics for entry in entries],
            deviations=deviations,
        )

    def rows(self) -> list[dict]:
        """Flat CSV rows: n, c0, sigma_min, then verdict flags and metrics."""
        return [
            {"n": n, "c0": c0, "sigma_min": sigma, **verdicts, **metrics}
            for n, c0, sigma, verdicts, metrics in zip(
                self.n_values, self.c0_values, self.sigma_min_values, self.verdicts, self.metrics
            )
        ]
