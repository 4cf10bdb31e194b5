from typing import Optional

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

from sepair.operators.hilbert_core.models import DEFAULT_TOLERANCE, Subspace, context_tolerance
from shared.utils import ComplexMatrix


class FiniteCStarAlgebra(BaseModel):
    """A = M_{n_1}(C) ⊕ ... ⊕ M_{n_k}(C)."""

    model_config = ConfigDict(frozen=True)

    block_dims: list[int] = Field(min_length=1, description="Block sizes n_i")

    @field_validator("block_dims")
    def check_blocks(cls, value: list[int]) -> list[int]:
        if any(n < 1 for n in value):
            raise ValueError(f"Block sizes must be positive, got {value}")
        return value

    @property
    def total_dim(self) -> int:
        return sum(n * n for n in self.block_dims)

    @property
    def offsets(self) -> list[int]:
        """Start of each block in the flat (row-major per block) layout."""
        return np.concatenate([[0], np.cumsum([n * n for n in self.block_dims])]).astype(int).tolist()

    def element(self, blocks) -> "AlgebraElement":
        return AlgebraElement(blocks=[np.asarray(b, dtype=np.complex128) for b in blocks])

    def zero(self) -> "AlgebraElement":
        return self.element([np.zeros((n, n)) for n in self.block_dims])

    def identity(self) -> "AlgebraElement":
        return self.element([np.eye(n) for n in self.block_dims])

    def matrix_unit(self, block: int, row: int, col: int) -> "AlgebraElement":
        blocks = [np.zeros((n, n)) for n in self.block_dims]
        blocks[block][row, col] = 1.0
        return self.element(blocks)

    def matrix_units(self) -> list["AlgebraElement"]:
        return [
            self.matrix_unit(i, p, q)
            for i, n in enumerate(self.block_dims)
            for p in range(n)
            for q in range(n)
        ]

    def flatten(self, a: "AlgebraElement") -> np.ndarray:
        self.check_element(a)
        return np.concatenate([block.reshape(-1) for block in a.blocks])

    def unflatten(self, vector: np.ndarray) -> "AlgebraElement":
        offsets = self.offsets
        return self.element(
            [vector[offsets[i] : offsets[i + 1]].reshape(n, n) for i, n in enumerate(self.block_dims)]
        )

    def check_element(self, a: "AlgebraElement") -> None:
        shapes = [block.shape for block in a.blocks]
        if shapes != [(n, n) for n in self.block_dims]:
            raise ValueError(f"Element blocks {shapes} do not match block_dims {self.block_dims}")


class AlgebraElement(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    blocks: list[ComplexMatrix]

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(blocks=[block.conj().T for block in self.blocks])

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(blocks=[a @ b for a, b in zip(self.blocks, other.blocks)])

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(blocks=[a + b for a, b in zip(self.blocks, other.blocks)])

    def norm(self) -> float:
        """C*-norm: the largest block operator norm."""
        return max(float(np.linalg.norm(block, 2)) if block.size else 0.0 for block in self.blocks)

    def is_close(self, other: "AlgebraElement", eq_abs: float) -> bool:
        return all(
            np.linalg.norm(a - b, 2) <= eq_abs for a, b in zip(self.blocks, other.blocks)
        )


class ModuleVector(BaseModel):
    """An element of E = A^m."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coords: list[AlgebraElement] = Field(min_length=1)

    @model_validator(mode="after")
    def check_same_algebra(self):
        shapes = {tuple(block.shape for block in c.blocks) for c in self.coords}
        if len(shapes) != 1:
            raise ValueError("All coordinates must belong to the same algebra")
        return self


class StandardModule(BaseModel):
    """
    The standard Hilbert A-module A^m.

    Vectors are flattened coordinate-major, then block by block, row-major
    within a block. The flat inner product is then sum_k tr<x_k, y_k>, so
    flat orthogonality of a right-invariant subspace coincides with
    A-valued orthogonality.
    """

    model_config = ConfigDict(frozen=True)

    algebra: FiniteCStarAlgebra
    m: int = Field(ge=1, description="Number of coordinates")

    @property
    def dim(self) -> int:
        return self.m * self.algebra.total_dim

    def flatten(self, x: ModuleVector) -> np.ndarray:
        if len(x.coords) != self.m:
            raise ValueError(f"Vector has {len(x.coords)} coordinates, module has {self.m}")
        return np.concatenate([self.algebra.flatten(c) for c in x.coords])

    def unflatten(self, vector: np.ndarray) -> ModuleVector:
        size = self.algebra.total_dim
        return ModuleVector(
            coords=[self.algebra.unflatten(vector[k * size : (k + 1) * size]) for k in range(self.m)]
        )

    def right_action(self, a: AlgebraElement) -> np.ndarray:
        """Matrix R_a with flatten(x a) = R_a flatten(x)."""
        self.algebra.check_element(a)
        per_coordinate = [np.kron(np.eye(block.shape[0]), block.T) for block in a.blocks]
        return scipy.linalg.block_diag(*(per_coordinate * self.m))

    def basis_actions(self) -> list[np.ndarray]:
        return [self.right_action(unit) for unit in self.algebra.matrix_units()]

    def state_gram(self, densities: list[np.ndarray]) -> np.ndarray:
        """G with f(<x, y>) = flatten(x)^* G flatten(y)."""
        per_coordinate = [np.kron(np.eye(rho.shape[0]), rho.T) for rho in densities]
        return scipy.linalg.block_diag(*(per_coordinate * self.m))


class Submodule(BaseModel):
    """A closed submodule of A^m, stored as a right-invariant subspace of the flat space."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    module: StandardModule
    generators: list[ModuleVector] = []
    flat: Subspace

    @model_validator(mode="after")
    def check_invariance(self, info: ValidationInfo):
        if self.flat.ambient_dim != self.module.dim:
            raise ValueError(
                f"Flat subspace lives in C^{self.flat.ambient_dim}, module has dimension {self.module.dim}"
            )
        if self.flat.dim:
            frame = self.flat.frame
            projector = frame @ frame.conj().T
            eq_abs = context_tolerance(info).eq_abs
            for action in self.module.basis_actions():
                moved = action @ frame
                if np.linalg.norm(moved - projector @ moved, 2) > eq_abs:
                    raise ValueError("Flat subspace is not invariant under the right action")
        return self

    @property
    def dim(self) -> int:
        return self.flat.dim


class State(BaseModel):
    """f(a) = sum_i tr(rho_i a_i)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    densities: list[ComplexMatrix] = Field(min_length=1)

    @field_validator("densities")
    def check_square(cls, value: list[np.ndarray]) -> list[np.ndarray]:
        for rho in value:
            if rho.shape[0] != rho.shape[1]:
                raise ValueError(f"Density matrices must be square, got {rho.shape}")
        return value

    def __call__(self, a: AlgebraElement) -> complex:
        return complex(sum(np.trace(rho @ block) for rho, block in zip(self.densities, a.blocks)))

    def support(self, eq_abs: float = DEFAULT_TOLERANCE.eq_abs) -> list[int]:
        return [i for i, rho in enumerate(self.densities) if np.linalg.norm(rho, 2) > eq_abs]

    def is_pure(self, eq_abs: float = DEFAULT_TOLERANCE.eq_abs) -> bool:
        support = self.support(eq_abs)
        if len(support) != 1:
            return False
        rho = self.densities[support[0]]
        return bool(np.linalg.norm(rho @ rho - rho, 2) <= eq_abs and abs(np.trace(rho) - 1) <= eq_abs)


class LocalizedSpace(BaseModel):
    """E_f realized as the range of Gram^{1/2}; quotient_map sends flatten(x) to iota_f(x)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gram: ComplexMatrix
    quotient_map: ComplexMatrix
    dim: int = Field(ge=0)

    @model_validator(mode="after")
    def check_shapes(self):
        if self.quotient_map.shape != (self.dim, self.gram.shape[0]):
            raise ValueError(
                f"Quotient map has shape {self.quotient_map.shape}, expected ({self.dim}, {self.gram.shape[0]})"
            )
        return self


class StateCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    state_index: int = Field(ge=0)
    equal: bool
    distance: float = Field(ge=0, description="Projection distance between the compared subspaces of E_f")


class StateSweepVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    checks: list[StateCheck] = []

    @property
    def all_equal(self) -> bool:
        return all(check.equal for check in self.checks)


class ComplementLocalizationVerdict(StateSweepVerdict):
    """(H_f)⊥ against (H⊥)_f per state."""

    complemented: bool


class ConcordanceVerdict(StateSweepVerdict):
    """(H∩K)_f against ((H⊥)_f)⊥ ∩ ((K⊥)_f)⊥ per state."""

    concordant: bool = Field(description="Structural verdict on the flat spaces")
    detecting_family: bool = Field(
        description="States include a faithful state and a pure state on every block"
    )

    @property
    def agrees(self) -> bool:
        return self.all_equal == self.concordant


class IntersectionLocalizationVerdict(StateSweepVerdict):
    """(H∩K)_f against H_f ∩ K_f per state."""

    concordant: bool


class NullSpaceReport(BaseModel):
    """Both descriptions of N_f: f(<x,x>) = 0, and f(<y,x>) = 0 for every y."""

    model_config = ConfigDict(frozen=True)

    dim_quadratic: int = Field(ge=0)
    dim_bilinear: int = Field(ge=0)
    equal: bool


class SeparationWitness(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    state: State
    distance: float = Field(gt=0, description="dist(iota_f(x0), L_f)")
    evaluations: int = Field(ge=1)
    block: Optional[int] = Field(default=None, description="Block carrying the pure state")
