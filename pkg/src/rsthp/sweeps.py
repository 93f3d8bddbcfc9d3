"""Monte-Carlo averaging: sample average over CSIT errors, grid search
over the common/private power split, and ergodic averaging over channel
draws, organized into reproducible sweeps.

Randomness discipline: the channel for index c is keyed by (seed, c)
and the error realization m for that channel by (seed, c, m), never by
position in a loop. Every scheme, power split, and grid point therefore
sees the same channels and the same error draws (common random
numbers), and a sweep is a pure function of its config. That also makes
serial and parallel execution bit-identical: workers recompute cells
independently and results are assembled in a fixed order.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    CHANNEL_STREAM,
    ErrorRegime,
    complex_gaussian,
    draw_error_ensemble,
    stream_rng,
)
from .exceptions import EmptyGridError, SchemeMismatchError
from .precoding import ALL_SCHEME_TAGS, SchemeTag, build_precoders
from .rates import sum_rate_samples

# 95% normal-approximation confidence multiplier for the ESR halfwidth.
_CI_FACTOR = 1.96


def default_power_split_grid() -> tuple[float, ...]:
    """Power-split search grid 0, 0.05, ..., 0.95."""
    return tuple(i / 20 for i in range(20))


def snr_db_to_power(snr_db: float) -> float:
    """Transmit power budget for a given SNR in dB (unit noise variance)."""
    return 10.0 ** (snr_db / 10.0)


def average_sum_rate(
    h_est: np.ndarray,
    scheme: SchemeTag,
    e_tr: float,
    power_loss: float,
    power_split: float,
    regime: ErrorRegime,
    n_error_samples: int,
    seed: int,
    channel_index: int = 0,
    sigma_n2: float = 1.0,
    errors: np.ndarray | None = None,
    return_log: bool = False,
):
    """Sample-average sum rate over the CSIT error ensemble of one channel.

    Errors are drawn from (seed, channel_index, m) unless a precomputed
    ensemble is passed in (the sweep layer reuses one ensemble across
    the whole power-split grid; the draws are identical either way).
    Under the perfect regime a single zero-error realization is used.

    With return_log=True also returns the (M,) per-realization sum
    rates; their arithmetic mean is the returned average, exactly.
    """
    if errors is None:
        if regime.is_perfect:
            errors = np.zeros((1,) + h_est.shape, dtype=complex)
        else:
            errors = draw_error_ensemble(
                h_est.shape[0],
                h_est.shape[1],
                regime.variance_at(e_tr),
                n_error_samples,
                seed,
                channel_index,
            )
    precoders = build_precoders(h_est, scheme, e_tr, power_loss, power_split)
    log = sum_rate_samples(precoders, errors, sigma_n2)
    asr = float(np.mean(log))
    return (asr, log) if return_log else asr


def optimize_power_split(
    h_est: np.ndarray,
    scheme: SchemeTag,
    e_tr: float,
    power_loss: float,
    regime: ErrorRegime,
    n_error_samples: int,
    grid,
    seed: int,
    channel_index: int = 0,
    sigma_n2: float = 1.0,
    errors: np.ndarray | None = None,
) -> tuple[float, float]:
    """Best power split on a grid by exhaustive sample-average search.

    Returns (split, average sum rate). Ties go to the smaller split so
    the result is unambiguous. The same error ensemble is used at every
    grid point, which keeps the objective a deterministic function of
    the split.
    """
    grid = tuple(float(t) for t in grid)
    if not grid:
        raise EmptyGridError("power-split grid is empty")
    if not scheme.rs and any(t > 0.0 for t in grid):
        raise SchemeMismatchError(
            f"scheme {scheme.tag} has no common stream to allocate power to"
        )
    if errors is None and not regime.is_perfect:
        errors = draw_error_ensemble(
            h_est.shape[0],
            h_est.shape[1],
            regime.variance_at(e_tr),
            n_error_samples,
            seed,
            channel_index,
        )
    best_split = None
    best_asr = -math.inf
    for split in grid:
        asr = average_sum_rate(
            h_est,
            scheme,
            e_tr,
            power_loss,
            split,
            regime,
            n_error_samples,
            seed,
            channel_index,
            sigma_n2,
            errors=errors,
        )
        if asr > best_asr or (asr == best_asr and split < best_split):
            best_asr = asr
            best_split = split
    return best_split, best_asr


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one sweep; two configs with equal fields
    produce byte-identical outputs.

    snr_grid_db is the x grid for SNR sweeps. When error_variance_grid
    is nonempty the sweep instead walks that grid at a fixed SNR
    (snr_grid_db must then hold exactly one value) and error_regime is
    ignored, each point using its own fixed error variance.
    """

    n_users: int = 4
    n_tx: int = 4
    schemes: tuple[SchemeTag, ...] = ALL_SCHEME_TAGS
    error_regime: ErrorRegime = ErrorRegime.perfect()
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    error_variance_grid: tuple[float, ...] = ()
    n_channels: int = 50
    n_error_samples: int = 100
    power_loss: float = 0.75
    power_split_grid: tuple[float, ...] = field(
        default_factory=default_power_split_grid
    )
    master_seed: int = 12345
    sigma_n2: float = 1.0

    @property
    def x_kind(self) -> str:
        if self.error_variance_grid:
            return "error_variance"
        if self.error_regime.kind == "snr-scaled":
            return "snr_db_alpha"
        return "snr_db"

    def validate(self) -> None:
        if not self.schemes:
            raise EmptyGridError("no schemes selected")
        if not self.power_split_grid:
            raise EmptyGridError("power-split grid is empty")
        if self.error_variance_grid:
            if len(self.snr_grid_db) != 1:
                raise EmptyGridError(
                    "error-variance sweep needs exactly one SNR point, "
                    f"got {len(self.snr_grid_db)}"
                )
        elif not self.snr_grid_db:
            raise EmptyGridError("SNR grid is empty")


@dataclass(frozen=True)
class SweepCell:
    """One (scheme, grid point) of a sweep."""

    scheme_tag: str
    x_value: float
    x_kind: str
    esr: float
    ci_halfwidth: float
    chosen_split_mean: float
    per_channel_asr: tuple[float, ...]
    per_channel_split: tuple[float, ...]


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    x_kind: str
    cells: tuple[SweepCell, ...]


def ergodic_sum_rate(
    config: SweepConfig,
    scheme: SchemeTag,
    e_tr: float,
    regime: ErrorRegime,
    x_value: float,
) -> SweepCell:
    """Ergodic sum rate of one scheme at one grid point.

    Averages the per-channel best average sum rate over n_channels
    channel draws. Rate-splitting schemes search the power-split grid
    per channel; base schemes evaluate at split 0. The confidence
    halfwidth is the 95% normal interval on the channel sample mean.
    """
    n_samples = 1 if regime.is_perfect else config.n_error_samples
    asr_values = np.empty(config.n_channels)
    splits = np.empty(config.n_channels)
    for c in range(config.n_channels):
        h_est = complex_gaussian(
            stream_rng(config.master_seed, CHANNEL_STREAM, c),
            (config.n_users, config.n_tx),
        )
        if regime.is_perfect:
            errors = np.zeros((1, config.n_users, config.n_tx), dtype=complex)
        else:
            errors = draw_error_ensemble(
                config.n_users,
                config.n_tx,
                regime.variance_at(e_tr),
                n_samples,
                config.master_seed,
                c,
            )
        if scheme.rs:
            split, asr = optimize_power_split(
                h_est,
                scheme,
                e_tr,
                config.power_loss,
                regime,
                n_samples,
                config.power_split_grid,
                config.master_seed,
                c,
                config.sigma_n2,
                errors=errors,
            )
        else:
            split = 0.0
            asr = average_sum_rate(
                h_est,
                scheme,
                e_tr,
                config.power_loss,
                0.0,
                regime,
                n_samples,
                config.master_seed,
                c,
                config.sigma_n2,
                errors=errors,
            )
        asr_values[c] = asr
        splits[c] = split

    esr = float(np.mean(asr_values))
    if config.n_channels > 1:
        ci = float(
            _CI_FACTOR
            * np.std(asr_values, ddof=1)
            / math.sqrt(config.n_channels)
        )
    else:
        ci = 0.0
    return SweepCell(
        scheme_tag=scheme.tag,
        x_value=float(x_value),
        x_kind=config.x_kind,
        esr=esr,
        ci_halfwidth=ci,
        chosen_split_mean=float(np.mean(splits)),
        per_channel_asr=tuple(float(a) for a in asr_values),
        per_channel_split=tuple(float(s) for s in splits),
    )


def _sweep_points(config: SweepConfig) -> list[tuple[float, float, ErrorRegime]]:
    """Grid points as (x_value, e_tr, regime) triples."""
    if config.error_variance_grid:
        e_tr = snr_db_to_power(config.snr_grid_db[0])
        return [
            (float(s2), e_tr, ErrorRegime.fixed_variance(s2))
            for s2 in config.error_variance_grid
        ]
    return [
        (float(db), snr_db_to_power(db), config.error_regime)
        for db in config.snr_grid_db
    ]


def _evaluate_cell(args: tuple) -> SweepCell:
    config, scheme, e_tr, regime, x_value = args
    return ergodic_sum_rate(config, scheme, e_tr, regime, x_value)


def run_sweep(config: SweepConfig, n_jobs: int = 1) -> SweepResult:
    """Evaluate every (scheme, grid point) cell of a sweep.

    n_jobs is an execution option only: results are assembled in the
    same (scheme tag, x value) order regardless, and each cell is a
    pure function of the config, so parallel output is bit-identical to
    serial output.
    """
    config.validate()
    tasks = [
        (config, scheme, e_tr, regime, x_value)
        for scheme in config.schemes
        for (x_value, e_tr, regime) in _sweep_points(config)
    ]
    tasks.sort(key=lambda t: (t[1].tag, t[4]))
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            cells = tuple(pool.map(_evaluate_cell, tasks))
    else:
        cells = tuple(_evaluate_cell(t) for t in tasks)
    return SweepResult(config=config, x_kind=config.x_kind, cells=cells)


def rerun_cell(config: SweepConfig, scheme: SchemeTag, x_value: float) -> SweepCell:
    """Recompute a single cell of a sweep (diagnostic convenience)."""
    for (xv, e_tr, regime) in _sweep_points(config):
        if xv == x_value:
            return ergodic_sum_rate(config, scheme, e_tr, regime, xv)
    raise EmptyGridError(f"x value {x_value} not on the sweep grid")
