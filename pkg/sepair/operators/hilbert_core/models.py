import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, model_validator

from sepair.config.configs import EQ_ABS, RANK_REL
from shared.utils import ComplexMatrix


class Tolerance(BaseModel):
    """Numerical tolerance policy carried explicitly by every rank or equality decision."""

    model_config = ConfigDict(frozen=True)

    rank_rel: float = Field(
        default=RANK_REL,
        gt=0,
        lt=1,
        description="Relative singular-value cutoff: sigma is kept when sigma > rank_rel * sigma_max",
    )
    eq_abs: float = Field(
        default=EQ_ABS,
        gt=0,
        lt=1,
        description="Absolute threshold for matrix equality in operator norm",
    )


DEFAULT_TOLERANCE = Tolerance()


def context_tolerance(info: ValidationInfo) -> Tolerance:
    """The `tol` passed through `model_validate(..., context={"tol": tol})`, else the default."""
    return (info.context or {}).get("tol", DEFAULT_TOLERANCE)


class Subspace(BaseModel):
    """
    A subspace of C^d given by an orthonormal column frame.

    Frames are not unique; two subspaces are compared through their
    projection matrices.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    ambient_dim: int = Field(ge=0, description="Dimension d of the ambient space C^d")
    frame: ComplexMatrix = Field(description="d x k matrix with orthonormal columns")

    @model_validator(mode="after")
    def check_frame(self, info: ValidationInfo):
        rows, cols = self.frame.shape
        if rows != self.ambient_dim:
            raise ValueError(f"Frame has {rows} rows, expected ambient_dim={self.ambient_dim}")
        if cols > self.ambient_dim:
            raise ValueError(f"Frame has {cols} columns in C^{self.ambient_dim}")
        if cols:
            deviation = np.linalg.norm(self.frame.conj().T @ self.frame - np.eye(cols), 2)
            if deviation > context_tolerance(info).eq_abs:
                raise ValueError(f"Frame columns are not orthonormal (deviation {deviation:.3e})")
        return self

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"
