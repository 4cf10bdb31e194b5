from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from shared.utils import ComplexPair


class PairReport(BaseModel):
    """Separation verdict and angle cosines of a pair (H, K)."""

    model_config = ConfigDict(frozen=True)

    c0: float = Field(ge=0, le=1, description="Dixmier cosine ||P_H P_K||")
    c: float = Field(ge=0, le=1, description="Friedrichs cosine ||P_H P_K - P_{H∩K}||")
    dim_intersection: int = Field(ge=0, description="dim(H ∩ K)")
    separated: bool = Field(description="H ∩ K = 0 (and H + K closed, automatic in finite dimensions)")
    alpha1: Optional[float] = Field(default=None, gt=0, description="||x+y|| >= alpha1 ||x||")
    alpha2: Optional[float] = Field(default=None, gt=0, description="||x+y|| >= alpha2 ||y||")

    @model_validator(mode="after")
    def check_consistency(self):
        if self.c > self.c0 + 1e-9:
            raise ValueError(f"Friedrichs cosine {self.c} exceeds Dixmier cosine {self.c0}")
        has_alphas = self.alpha1 is not None and self.alpha2 is not None
        if has_alphas != self.separated:
            raise ValueError("Separation constants are present exactly when the pair is separated")
        return self


class CombinationCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    lambda1: ComplexPair
    lambda2: ComplexPair
    equal: bool = Field(description="R(lambda1 P + lambda2 Q) = R(P) + R(Q)")


class SumEquivalenceReport(BaseModel):
    """Range identities for two projections P, Q."""

    model_config = ConfigDict(frozen=True)

    common_dim: int = Field(ge=0, description="dim(R(P) + R(Q))")
    sum_range_equal: bool = Field(description="R(P) + R(Q) = R(P + Q)")
    complement_range_equal: bool = Field(description="R(I-P) + R(I-Q) = R(2I - P - Q)")
    combinations: list[CombinationCheck] = []

    @property
    def holds(self) -> bool:
        return (
            self.sum_range_equal
            and self.complement_range_equal
            and all(check.equal for check in self.combinations)
        )


class SampledRatios(BaseModel):
    """Brute-force minima of ||x+y||/||x|| and ||x+y||/||y|| over sampled unit vectors."""

    model_config = ConfigDict(frozen=True)

    min_ratio_x: float = Field(ge=0)
    min_ratio_y: float = Field(ge=0)
    samples: int = Field(ge=1)
