from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, model_validator

from sepair.operators.hilbert_core.models import Subspace, context_tolerance
from shared.utils import ComplexMatrix, ComplexPair


def _scaled_residual(M: np.ndarray) -> float:
    if not M.size:
        return 0.0
    norm = float(np.linalg.norm(M, 2))
    return float(np.linalg.norm(M @ M - M, 2)) / max(1.0, norm**2)


class Idempotent(BaseModel):
    """An oblique projection onto `range` along `nullspace`."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: ComplexMatrix = Field(description="Square matrix with M^2 = M")
    range: Subspace = Field(description="R(M)")
    nullspace: Subspace = Field(description="N(M)")

    @model_validator(mode="after")
    def check_structure(self, info: ValidationInfo):
        rows, cols = self.matrix.shape
        if rows != cols:
            raise ValueError(f"Idempotent must be square, got {rows}x{cols}")
        if self.range.ambient_dim != rows or self.nullspace.ambient_dim != rows:
            raise ValueError("Range and nullspace must live in the space the matrix acts on")
        if self.range.dim + self.nullspace.dim != rows:
            raise ValueError(
                f"dim R + dim N = {self.range.dim + self.nullspace.dim}, expected {rows}"
            )
        if _scaled_residual(self.matrix) > context_tolerance(info).eq_abs:
            raise ValueError("Matrix is not idempotent")
        return self

    @property
    def ambient_dim(self) -> int:
        return self.matrix.shape[0]


class CanonicalPair(BaseModel):
    """Annihilating idempotents with Pi_1(x+y+z) = x and Pi_2(x+y+z) = y."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pi1: Idempotent
    pi2: Idempotent
    p_tilde: ComplexMatrix = Field(description="Orthogonal projection onto H + K")
    condition: float = Field(ge=1, description="Condition number of the basis [frame_H frame_K frame_W]")

    @model_validator(mode="after")
    def check_annihilating(self, info: ValidationInfo):
        eq_abs = context_tolerance(info).eq_abs
        scale = max(1.0, float(np.linalg.norm(self.pi1.matrix, 2)) * float(np.linalg.norm(self.pi2.matrix, 2)))
        for product in (self.pi1.matrix @ self.pi2.matrix, self.pi2.matrix @ self.pi1.matrix):
            if product.size and float(np.linalg.norm(product, 2)) > eq_abs * scale:
                raise ValueError("Canonical idempotents must annihilate each other")
        return self


class KolihaReport(BaseModel):
    """Residuals of the identities satisfied by Pi_{P,Q} = (I-PQ)^-1 P (I-PQ)."""

    model_config = ConfigDict(frozen=True)

    idempotent_residual: float = Field(ge=0, description="||Pi^2 - Pi||")
    range_matches: bool = Field(description="R(Pi) = R(P)")
    nullspace_matches: bool = Field(description="N(Pi) = R(Q) + (N(P) ∩ N(Q))")
    times_p_residual: float = Field(ge=0, description="||Pi P - P||")
    times_q_residual: float = Field(ge=0, description="||Pi Q||")
    swap_residual: float = Field(ge=0, description="||(I-PQ)^-1 P - P (I-QP)^-1||")
    norm_symmetry_gap: float = Field(ge=0, description="| ||QP|| - ||PQ|| |")

    def holds(self, eq_abs: float) -> bool:
        return (
            self.range_matches
            and self.nullspace_matches
            and max(
                self.idempotent_residual,
                self.times_p_residual,
                self.times_q_residual,
                self.swap_residual,
                self.norm_symmetry_gap,
            )
            <= eq_abs
        )


class MPFormulaReport(BaseModel):
    """Closed-form pseudoinverse of Pi_1 + lambda Pi_2 checked against a direct SVD pseudoinverse."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, populate_by_name=True)

    lam: ComplexPair = Field(alias="lambda")
    formula: ComplexMatrix
    direct: ComplexMatrix
    absolute_error: float = Field(ge=0)
    relative_error: float = Field(ge=0)
    p_tilde_residual: float = Field(ge=0, description="||(Pi_1 + lambda Pi_2) X - P~||")
    q_tilde_residual: float = Field(ge=0, description="||X (Pi_1 + lambda Pi_2) - Q~||")
    sandwich_residuals: tuple[float, float] = Field(
        description="||Pi_i (Pi_1 + Pi_2)^+ Pi_i - Pi_i|| for i = 1, 2"
    )

    def holds(self, relative: float, eq_abs: float) -> bool:
        return self.relative_error <= relative and max(
            self.p_tilde_residual, self.q_tilde_residual, *self.sandwich_residuals
        ) <= eq_abs


class LambdaRecord(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: ComplexPair = Field(alias="lambda")
    dim_range: int = Field(ge=0, description="dim R(Pi_1 + lambda Pi_2)")
    sigma_min: Optional[float] = Field(default=None, description="Smallest positive singular value")
    in_constancy_check: bool = Field(description="False for lambda = 0")


class RangeSweepReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    reference_dim: int = Field(ge=0, description="dim R(Pi_1 + Pi_2)")
    records: list[LambdaRecord]

    @property
    def constant(self) -> bool:
        return all(r.dim_range == self.reference_dim for r in self.records if r.in_constancy_check)


class SumProjectionDiagnosis(BaseModel):
    """Whether Pi_1 + Pi_2 is the orthogonal projection onto R(Pi_1) + R(Pi_2), and why."""

    model_config = ConfigDict(frozen=True)

    is_projection_sum: bool = Field(description="Pi_1 + Pi_2 = P~")
    deviation: float = Field(ge=0, description="||Pi_1 + Pi_2 - P~||")
    pi1_is_koliha: bool = Field(description="Pi_1 = Pi_{P,Q}")
    pi2_is_koliha: bool = Field(description="Pi_2 = Pi_{Q,P}")


class AdjointDecompositionReport(BaseModel):
    """C^d = H⊥ ⊕ (K⊥ ∩ (H+K)), and Pi_1* is the idempotent of that splitting."""

    model_config = ConfigDict(frozen=True)

    direct_sum: bool
    adjoint_matches: bool = Field(description="Pi_1* projects onto K⊥ ∩ (H+K) along H⊥")
    condition: Optional[float] = None
