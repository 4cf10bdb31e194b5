from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from sepair.config.configs import (
    ALPHA_GRID,
    ALPHA_REFINE_ITERS,
    ALPHA_STARTS,
    ALPHA_TOLERANCE,
    SEED,
)
from sepair.operators.cstar_modules.models import State
from shared.utils import ComplexVector

AngleKind = Literal["dixmier", "friedrichs"]


class OptimizerBudget(BaseModel):
    """Search effort for the supremum over pure states."""

    model_config = ConfigDict(frozen=True)

    grid: int = Field(default=ALPHA_GRID, ge=1, description="Pure states per block in the coarse pass")
    refine_iters: int = Field(default=ALPHA_REFINE_ITERS, ge=0, description="Nelder-Mead iterations per start")
    starts: int = Field(default=ALPHA_STARTS, ge=1, description="Best grid points refined locally")
    seed: int = Field(default=SEED, description="Seed of the quasi-random grid and the mixed-state samples")
    tolerance: float = Field(default=ALPHA_TOLERANCE, gt=0, description="Slack used by verdicts built on estimates")
    mixed_samples: int = Field(default=4, ge=0, description="Random mixed states compared against the estimate")


class LandscapePoint(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    index: int = Field(ge=0)
    block: int = Field(ge=0)
    xi: ComplexVector
    value: float = Field(ge=0, le=1)


class AngleEstimate(BaseModel):
    """
    Lower bound for a local angle cosine, attained at argmax_state.

    The supremum is searched over pure states only. mixed_state_max is the
    best value seen on random mixed states; flagged is set when it exceeds
    the pure-state estimate by more than the budget tolerance.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: AngleKind
    value: float = Field(ge=0, le=1)
    argmax_state: State
    argmax_block: int = Field(ge=0)
    iterations: int = Field(ge=1, description="Objective evaluations, grid and refinement")
    converged: bool = Field(description="Refinement stalled: relative improvement < 1e-6 over 50 steps")
    grid_size: int = Field(ge=1)
    mixed_state_max: Optional[float] = Field(default=None, ge=0, le=1)
    flagged: bool = False
    landscape: list[LandscapePoint] = Field(default_factory=list, exclude=True)


class AlphaComplementVerdict(BaseModel):
    """alpha(H, K) against alpha(H⊥, K⊥)."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(ge=0, le=1)
    alpha_complement: float = Field(ge=0, le=1)
    difference: float = Field(ge=0)
    tolerance: float = Field(gt=0)

    @property
    def holds(self) -> bool:
        return self.difference <= self.tolerance


class ZeroAngleVerdict(BaseModel):
    """alpha(H, K) = 0 against H = (H∩K) + (H∩K⊥)."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(ge=0, le=1)
    zero_angle: bool
    lattice_identity: bool

    @property
    def agree(self) -> bool:
        return self.zero_angle == self.lattice_identity


class InequalityCheck(BaseModel):
    """||x+y||^2 against (||x|| - s)^2 + 2(1 - alpha0)||x|| s with s = f0<y,y>^{1/2}."""

    model_config = ConfigDict(frozen=True)

    lhs: float = Field(ge=0)
    rhs: float
    alpha0: float = Field(ge=0, le=1, description="Cosine used in the bound")

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs


class SeparationFromAlphaVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha0: float = Field(ge=0, le=1)
    margin: float = Field(gt=0, lt=1)
    separated: bool = Field(description="is_separated on the flat subspaces")
    inequality_checks: list[InequalityCheck] = []

    @property
    def below_margin(self) -> bool:
        return self.alpha0 < 1 - self.margin

    @property
    def implication_holds(self) -> bool:
        return not self.below_margin or self.separated


class CommutationCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    state_index: int = Field(ge=0)
    commute: bool = Field(description="P_{H_f} P_{K_f} = P_{K_f} P_{H_f}")
    product_is_meet: bool = Field(description="P_{H_f} P_{K_f} = P_{H_f ∩ K_f}")


class CommutationBridgeVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    checks: list[CommutationCheck] = []
    alpha: Optional[float] = Field(
        default=None, ge=0, le=1, description="Local Friedrichs estimate, computed only when every check commutes"
    )

    @property
    def all_commute(self) -> bool:
        return all(check.commute for check in self.checks)


class ChainCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    state_index: int = Field(ge=0)
    localized: float = Field(ge=0, le=1, description="c(H_f, K_f)")
    complemented: float = Field(ge=0, le=1, description="c((H⊥)_f, (K⊥)_f)")


class InequalityChainVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    checks: list[ChainCheck] = []
    eq_abs: float = Field(gt=0)

    @model_validator(mode="after")
    def check_indices(self):
        indices = [check.state_index for check in self.checks]
        if indices != sorted(set(indices)):
            raise ValueError("Chain checks must be listed once per state in increasing order")
        return self

    @property
    def holds(self) -> bool:
        return all(check.complemented >= check.localized - self.eq_abs for check in self.checks)
