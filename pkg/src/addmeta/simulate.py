"""Simulation-based additive effect estimator.

Instead of standardizing the reported summary statistics directly, this
estimator regenerates plausible individual-level data: it repeatedly draws
each genotype group from a normal distribution with the reported mean and
standard deviation, fits the additive regression on group codes (1, 2, 3),
takes the d denominator from the fit's ANOVA table as
``sqrt(model mean square / F)`` (i.e. the residual standard deviation), and
averages Cohen's d over the iterations.  The averaged d then goes through
the same pairwise d-to-g machinery as the crude estimator.

Iterations are partitioned into fixed-size blocks, each drawing from a
random substream keyed by (seed, block index), and block sums are combined
with exact summation in block order.  Results are therefore bit-identical
for any ``workers`` setting.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._rng import SIM_BLOCK, substream
from .effects import AdditiveEffect, StudySummary, effect_from_d

BLOCK_SIZE = 1024

DEFAULT_SEED = 20270405
DEFAULT_ITERATIONS = 10_000


class DegenerateSampleError(RuntimeError):
    """Raised when a drawn sample has zero variance everywhere."""


@dataclass(frozen=True)
class SimConfig:
    """Iteration count, seed and parallelism for the simulation estimator."""

    iterations: int = DEFAULT_ITERATIONS
    seed: int = DEFAULT_SEED
    workers: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class SimDraw:
    """Additive fit of one drawn dataset: slope, ANOVA-derived sd, their ratio."""

    beta: float
    sd: float
    d: float


@dataclass(frozen=True)
class SimStats:
    """Iteration averages (and the empirical standard error of mean d)."""

    beta_mean: float
    sd_beta_mean: float
    d_mean: float
    d_se: float
    iterations: int


class _Design:
    """Constants of the additive regression for fixed group sizes."""

    def __init__(self, n: Sequence[int]):
        self.n = np.asarray(n, dtype=float)
        self.codes = np.array([1.0, 2.0, 3.0])
        self.n_total = float(self.n.sum())
        self.code_mean = float((self.n * self.codes).sum() / self.n_total)
        self.s_xx = float((self.n * (self.codes - self.code_mean) ** 2).sum())


def _anova_sd(design: _Design, means: np.ndarray, sse_within: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """Denominator of d via the regression ANOVA table: sqrt(MS_model / F).

    ``means`` is (iterations, 3), ``sse_within`` the per-iteration sum of
    squared deviations from the group means.  The returned value equals the
    residual standard deviation of the additive fit (total N - 2 degrees of
    freedom), including any lack of fit of the three group means to the line.
    """
    grand = (means * design.n).sum(axis=1) / design.n_total
    intercept = grand - betas * design.code_mean
    fitted = intercept[:, None] + betas[:, None] * design.codes[None, :]
    # RSS = within-group SS plus the group means' lack of fit to the line;
    # summing the two nonnegative parts avoids cancellation when both are tiny
    lack_of_fit = (design.n * (means - fitted) ** 2).sum(axis=1)
    rss = sse_within + lack_of_fit
    ms_model = betas * betas * design.s_xx  # 1 degree of freedom
    with np.errstate(divide="ignore", invalid="ignore"):
        f_stat = ms_model / (rss / (design.n_total - 2.0))
        sd = np.sqrt(ms_model / f_stat)
    # ss_model == 0 (flat fitted line) makes the ratio 0/0; fall back to the
    # algebraically identical residual form.
    flat = ~np.isfinite(sd)
    if np.any(flat):
        sd[flat] = np.sqrt(rss[flat] / (design.n_total - 2.0))
    return sd


def _slope(design: _Design, means: np.ndarray) -> np.ndarray:
    centered = design.codes - design.code_mean
    grand = (means * design.n).sum(axis=1) / design.n_total
    s_xy = (centered * design.n * (means - grand[:, None])).sum(axis=1)
    return s_xy / design.s_xx


def additive_regression(groups: Sequence[np.ndarray]) -> SimDraw:
    """Fit the additive model to one individual-level dataset.

    ``groups`` holds the three per-group phenotype vectors.  Returns the
    least-squares slope on group codes (1, 2, 3), the ANOVA-derived standard
    deviation, and their ratio d.
    """
    if len(groups) != 3:
        raise ValueError(f"expected 3 groups, got {len(groups)}")
    design = _Design([len(g) for g in groups])
    means = np.array([[float(np.mean(g)) for g in groups]])
    sse = np.array([sum(float(((g - np.mean(g)) ** 2).sum()) for g in groups)])
    beta = _slope(design, means)
    sd = _anova_sd(design, means, sse, beta)
    if sd[0] == 0.0:
        raise DegenerateSampleError("sample has zero variance in every group and no slope")
    return SimDraw(beta=float(beta[0]), sd=float(sd[0]), d=float(beta[0] / sd[0]))


def simulate_study_once(summary: StudySummary, rng: np.random.Generator) -> SimDraw:
    """Draw one synthetic dataset matching ``summary`` and fit it."""
    groups = [rng.normal(summary.m[k], summary.sd[k], size=summary.n[k]) for k in range(3)]
    return additive_regression(groups)


def _block(summary: StudySummary, design: _Design, seed: int, index: int, count: int):
    """Per-iteration (sums of) beta, sd and d for one block of draws."""
    rng = substream(seed, SIM_BLOCK, index)
    means = np.empty((count, 3))
    sse = np.zeros(count)
    for k in range(3):
        draws = rng.normal(summary.m[k], summary.sd[k], size=(count, summary.n[k]))
        mu = draws.mean(axis=1)
        means[:, k] = mu
        sse += ((draws - mu[:, None]) ** 2).sum(axis=1)
    betas = _slope(design, means)
    sds = _anova_sd(design, means, sse, betas)
    if np.any(sds == 0.0):
        raise DegenerateSampleError("zero-variance draw inside simulation block")
    ds = betas / sds
    return (
        math.fsum(betas.tolist()),
        math.fsum(sds.tolist()),
        math.fsum(ds.tolist()),
        math.fsum((ds * ds).tolist()),
    )


def simulate_study(summary: StudySummary, config: SimConfig = SimConfig()) -> SimStats:
    """Run the iteration loop and return the iteration averages.

    Deterministic for a given (summary, seed, iterations) regardless of the
    worker count.
    """
    design = _Design(summary.n)
    n_iter = config.iterations
    blocks = [
        (i, start, min(BLOCK_SIZE, n_iter - start))
        for i, start in enumerate(range(0, n_iter, BLOCK_SIZE))
    ]
    if config.workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            partials = list(
                pool.map(lambda b: _block(summary, design, config.seed, b[0], b[2]), blocks)
            )
    else:
        partials = [_block(summary, design, config.seed, i, count) for i, _, count in blocks]
    sum_beta = math.fsum(p[0] for p in partials)
    sum_sd = math.fsum(p[1] for p in partials)
    sum_d = math.fsum(p[2] for p in partials)
    sum_d2 = math.fsum(p[3] for p in partials)
    d_mean = sum_d / n_iter
    if n_iter > 1:
        var_d = max(0.0, (sum_d2 - n_iter * d_mean * d_mean) / (n_iter - 1))
        d_se = math.sqrt(var_d / n_iter)
    else:
        d_se = float("nan")
    return SimStats(
        beta_mean=sum_beta / n_iter,
        sd_beta_mean=sum_sd / n_iter,
        d_mean=d_mean,
        d_se=d_se,
        iterations=n_iter,
    )


def sim_effect(summary: StudySummary, config: SimConfig = SimConfig()) -> AdditiveEffect:
    """Simulation-based additive effect for one study.

    ``beta`` and ``sd_beta`` of the result are iteration means of the
    per-draw slope and ANOVA sd; ``d`` is the iteration mean of the per-draw
    ratio (so ``d`` differs from ``beta/sd_beta`` by O(1/iterations)).  The
    pairwise g machinery is applied to the averaged d exactly as in the
    crude estimator.
    """
    stats = simulate_study(summary, config)
    return effect_from_d(
        summary.study_id, stats.beta_mean, stats.sd_beta_mean, stats.d_mean, summary.n, "simulation"
    )
