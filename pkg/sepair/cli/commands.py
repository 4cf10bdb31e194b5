import functools
from pathlib import Path
from typing import Optional

import click
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from sepair.cli.common.io import (
    ConcordanceSummary,
    LocalizationEntry,
    LocalizationSummary,
    OutputFormat,
    PinvSummary,
    SeparationSummary,
    flatten_dump,
    load_module,
    load_pair,
    load_states,
    load_submodule,
    render,
    rows_to_csv,
    write_text,
)
from sepair.common.exceptions import SepairError
from sepair.config.configs import (
    ALPHA_GRID,
    ALPHA_REFINE_ITERS,
    ALPHA_STARTS,
    DEFAULT_LAMBDAS,
    EQ_ABS,
    LOG_LEVEL,
    RANK_REL,
    SEED,
)
from sepair.operators.cstar_modules.tools import (
    check_complement_localization,
    check_concordance_via_states,
    check_intersection_localization,
    localize,
    localize_submodule,
    null_space_characterizations,
    state_family,
)
from sepair.operators.hilbert_core.models import Tolerance
from sepair.operators.idempotents.tools import canonical_pair, verify_mp_formula
from sepair.operators.local_angles.models import OptimizerBudget
from sepair.operators.local_angles.tools import local_angle
from sepair.operators.studies.tools import run_sweep
from sepair.operators.subspace_pairs.tools import is_separated, sampled_separation_ratio
from shared.logger_setup import get_logger, set_level

logger = get_logger(__name__)


class RunConfig(BaseModel):
    """Global options shared by every subcommand."""

    model_config = ConfigDict(frozen=True)

    tolerance: Tolerance = Field(default_factory=Tolerance)
    seed: int = SEED
    output_format: OutputFormat = "json"


def handle_errors(command):
    """Map library exceptions to the exit-code contract: 2 input, 3 precondition, 4 internal."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return command(*args, **kwargs)
        except SepairError as e:
            logger.debug(f"{type(e).__name__} in {ctx.info_name}", exc_info=True)
            click.echo(f"Error ({type(e).__name__}): {e}", err=True)
            ctx.exit(e.exit_code)

    return wrapper


def _emit(config: RunConfig, report: BaseModel, rows: Optional[list[dict]] = None) -> None:
    click.echo(render(report, config.output_format, rows))


def _parse_n_list(ctx, param, value: str) -> list[int]:
    try:
        values = [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")
    if not values:
        raise click.BadParameter("at least one n is required")
    return values


def _states_for(description, states_path: Optional[Path]):
    if states_path is not None:
        return load_states(states_path)
    return state_family(description.module.algebra)


@click.group()
@click.option("--tol-rank", type=float, default=RANK_REL, show_default=True, help="Relative singular-value cutoff")
@click.option("--tol-eq", type=float, default=EQ_ABS, show_default=True, help="Absolute equality threshold")
@click.option("--seed", type=int, default=SEED, show_default=True, help="Seed for grids and samplers")
@click.option(
    "--format", "output_format", type=click.Choice(["json", "csv", "text"]), default="json", show_default=True
)
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=LOG_LEVEL,
    show_default=True,
)
@click.pass_context
def cli(ctx, tol_rank: float, tol_eq: float, seed: int, output_format: str, log_level: str):
    """Separated pairs of subspaces and submodules: angles, idempotents, localization."""
    set_level(log_level)
    try:
        tolerance = Tolerance(rank_rel=tol_rank, eq_abs=tol_eq)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--tol-rank/--tol-eq")
    ctx.obj = RunConfig(tolerance=tolerance, seed=seed, output_format=output_format)


@cli.command()
@click.argument("pair_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_obj
@handle_errors
def angles(config: RunConfig, pair_file: Path):
    """Dixmier and Friedrichs cosines of the pair in PAIR_FILE."""
    H, K = load_pair(pair_file, config.tolerance)
    _emit(config, is_separated(H, K, config.tolerance))


@cli.command()
@click.argument("pair_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--sample", type=click.IntRange(min=0), default=0, help="Also sample min ||x+y||/||x|| over N unit vectors")
@click.pass_obj
@handle_errors
def separated(config: RunConfig, pair_file: Path, sample: int):
    """Separation verdict and constants, optionally against a sampled oracle."""
    H, K = load_pair(pair_file, config.tolerance)
    sampled = None
    if sample:
        sampled = sampled_separation_ratio(H, K, sample, np.random.default_rng(config.seed))
    _emit(config, SeparationSummary(report=is_separated(H, K, config.tolerance), sampled=sampled))


@cli.command()
@click.argument("pair_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_obj
@handle_errors
def idempotents(config: RunConfig, pair_file: Path):
    """Annihilating idempotents Pi1, Pi2 of a separated pair."""
    H, K = load_pair(pair_file, config.tolerance)
    _emit(config, canonical_pair(H, K, config.tolerance))


@cli.command()
@click.argument("pair_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--lambda",
    "lambdas",
    type=(float, float),
    multiple=True,
    metavar="RE IM",
    help="Coefficient of Pi2 as a real and an imaginary part; repeatable",
)
@click.pass_obj
@handle_errors
def pinv(config: RunConfig, pair_file: Path, lambdas: tuple[tuple[float, float], ...]):
    """(Pi1 + lambda Pi2)^+ by the closed formula, checked against a direct pseudoinverse."""
    H, K = load_pair(pair_file, config.tolerance)
    pair = canonical_pair(H, K, config.tolerance)
    values = [complex(re, im) for re, im in lambdas] or list(DEFAULT_LAMBDAS)
    reports = [verify_mp_formula(pair.pi1, pair.pi2, lam, config.tolerance) for lam in values]
    _emit(config, PinvSummary(reports=reports))


@cli.command("localize")
@click.argument("module_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--states", "states_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_obj
@handle_errors
def localize_command(config: RunConfig, module_file: Path, states_path: Optional[Path]):
    """Localize the module and each named submodule at every state."""
    tol = config.tolerance
    description = load_module(module_file)
    module = description.module
    submodules = {name: load_submodule(description, name, tol) for name in sorted(description.submodules)}
    states = _states_for(description, states_path)
    verdicts = {name: check_complement_localization(H, states, tol) for name, H in submodules.items()}

    entries = []
    for index, f in enumerate(states):
        localized = localize(module, f, tol)
        entries.append(
            LocalizationEntry(
                state_index=index,
                dim=localized.dim,
                null_space_dim=null_space_characterizations(module, f, tol).dim_quadratic,
                submodule_dims={name: localize_submodule(H, localized, tol).dim for name, H in submodules.items()},
                complement_equal={name: verdict.checks[index].equal for name, verdict in verdicts.items()},
            )
        )
    summary = LocalizationSummary(module_dim=module.dim, entries=entries)
    _emit(config, summary, rows=[dict(flatten_dump(entry.model_dump(mode="json"))) for entry in entries])


@cli.command()
@click.argument("module_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--h", "h_name", required=True, help="Name of H in the module file")
@click.option("--k", "k_name", required=True, help="Name of K in the module file")
@click.option("--states", "states_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_obj
@handle_errors
def concordant(config: RunConfig, module_file: Path, h_name: str, k_name: str, states_path: Optional[Path]):
    """Concordance of (H, K), structurally and state by state."""
    tol = config.tolerance
    description = load_module(module_file)
    H, K = load_submodule(description, h_name, tol), load_submodule(description, k_name, tol)
    states = _states_for(description, states_path)
    _emit(
        config,
        ConcordanceSummary(
            concordance=check_concordance_via_states(H, K, states, tol),
            intersection=check_intersection_localization(H, K, states, tol),
        ),
    )


@cli.command()
@click.argument("module_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--h", "h_name", required=True)
@click.option("--k", "k_name", required=True)
@click.option("--kind", type=click.Choice(["dixmier", "friedrichs"]), default="friedrichs", show_default=True)
@click.option("--grid", type=click.IntRange(min=1), default=ALPHA_GRID, show_default=True)
@click.option("--refine-iters", type=click.IntRange(min=0), default=ALPHA_REFINE_ITERS, show_default=True)
@click.option("--starts", type=click.IntRange(min=1), default=ALPHA_STARTS, show_default=True)
@click.option("--landscape", type=click.Path(dir_okay=False, path_type=Path), help="Write the grid values as CSV")
@click.pass_obj
@handle_errors
def alpha(
    config: RunConfig,
    module_file: Path,
    h_name: str,
    k_name: str,
    kind: str,
    grid: int,
    refine_iters: int,
    starts: int,
    landscape: Optional[Path],
):
    """Local angle cosine: supremum over pure states of the localized cosine."""
    tol = config.tolerance
    description = load_module(module_file)
    H, K = load_submodule(description, h_name, tol), load_submodule(description, k_name, tol)
    budget = OptimizerBudget(grid=grid, refine_iters=refine_iters, starts=starts, seed=config.seed)
    estimate = local_angle(H, K, kind, budget, tol, record_landscape=landscape is not None)
    if landscape is not None:
        rows = [{"index": p.index, "block": p.block, "value": p.value} for p in estimate.landscape]
        write_text(landscape, rows_to_csv(rows))
    _emit(config, estimate)


@cli.command()
@click.argument("name", type=click.Choice(["shift", "ct", "cx"]))
@click.option("--n-list", callback=_parse_n_list, default="10,20,40,80", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Also write the sweep as CSV")
@click.pass_obj
@handle_errors
def example(config: RunConfig, name: str, n_list: list[int], out: Optional[Path]):
    """Run one of the parameterized studies over a list of grid sizes."""
    report = run_sweep(name, n_list, config.tolerance, OptimizerBudget(seed=config.seed))
    if out is not None:
        write_text(out, rows_to_csv(report.rows()))
    _emit(config, report, rows=report.rows())
