"""Seeded Euler-Maruyama simulation of the log-price SDE.

Serves as the stochastic oracle for the closed-form results: path
ensembles, terminal-value histograms, and Monte Carlo estimates of
regime-transition probabilities (terminal-time classification, not
first passage).

Randomness is counter-based: step k of a run draws its increments from
an independent Philox substream, ``Philox(seed).jumped(k)``, and path p
uses the p-th normal of that block. Draws therefore do not depend on
iteration order, and the same (params, config) reproduce ensembles
bit-for-bit on any platform; generating paths in parallel cannot change
the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .model import Direction, ModelParams

__all__ = [
    "SimConfig",
    "PathEnsemble",
    "MCEstimate",
    "Histogram",
    "simulate",
    "terminal_values",
    "mc_transition_prob",
    "mc_density_histogram",
    "write_ensemble_csv",
]


@dataclass(frozen=True)
class SimConfig:
    """Discretization and seeding of one simulation run.

    dt and horizon are in years; horizon must be an integer number of
    steps (within 1e-9 relative).
    """

    n_paths: int
    dt: float
    horizon: float
    seed: int
    x0: float

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValidationError(f"n_paths must be >= 1, got {self.n_paths}")
        if not (self.dt > 0):
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        if not (self.horizon > 0):
            raise ValidationError(f"horizon must be > 0, got {self.horizon}")
        if not (self.dt < self.horizon):
            raise ValidationError(f"dt={self.dt} must be smaller than horizon={self.horizon}")
        n = round(self.horizon / self.dt)
        if n < 1 or abs(n * self.dt - self.horizon) > 1e-9 * self.horizon:
            raise ValidationError(
                f"horizon/dt = {self.horizon / self.dt} does not round to an integer step count"
            )

    @property
    def n_steps(self) -> int:
        return round(self.horizon / self.dt)


@dataclass
class PathEnsemble:
    """Simulated log-price paths on a uniform time grid.

    paths has shape (n_paths, n_steps + 1); every path starts at the
    configured x0 in column 0.
    """

    times: np.ndarray
    paths: np.ndarray
    params: ModelParams
    seed: int


@dataclass(frozen=True)
class MCEstimate:
    """Point estimate with its standard error of the mean."""

    value: float
    std_error: float
    n: int

    def __post_init__(self) -> None:
        if self.std_error < 0:
            raise ValidationError(f"std_error must be >= 0, got {self.std_error}")
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class Histogram:
    """Normalized terminal-value histogram (integrates to 1 over bins)."""

    edges: np.ndarray
    density: np.ndarray
    n_samples: int = field(default=1)


def _step_normals(seed: int, step: int, n: int) -> np.ndarray:
    """Standard normals for one time step, from its own Philox substream."""
    return np.random.Generator(np.random.Philox(seed).jumped(step)).standard_normal(n)


def _run(params: ModelParams, cfg: SimConfig, store: bool):
    n, steps = cfg.n_paths, cfg.n_steps
    nu, x_star = params.nu, params.x_star
    mu_dt = params.mu_tilde * cfg.dt
    sig_sqdt = params.sigma * math.sqrt(cfg.dt)

    x = np.full(n, cfg.x0, dtype=float)
    out = None
    if store:
        out = np.empty((n, steps + 1), dtype=float)
        out[:, 0] = x
    scratch = np.empty(n, dtype=float)
    for k in range(steps):
        z = _step_normals(cfg.seed, k, n)
        if nu > 0.0 and mu_dt != 0.0:
            np.subtract(x, x_star, out=scratch)
            scratch *= nu
            np.tanh(scratch, out=scratch)
            scratch *= mu_dt
            x += scratch
        z *= sig_sqdt
        x += z
        if store:
            out[:, k + 1] = x
    if not np.all(np.isfinite(x)):
        raise ValidationError("simulation produced non-finite values")
    return x, out


def simulate(params: ModelParams, cfg: SimConfig) -> PathEnsemble:
    """Euler-Maruyama integration, full grid stored.

    X_{k+1} = X_k + mu(X_k) dt + sigma sqrt(dt) Z_k with the Z_k drawn
    as described in the module docstring. Memory is
    O(n_paths * n_steps); use :func:`terminal_values` or the estimators
    when only time-T values are needed.
    """
    _, out = _run(params, cfg, store=True)
    times = np.arange(cfg.n_steps + 1, dtype=float) * cfg.dt
    return PathEnsemble(times=times, paths=out, params=params, seed=cfg.seed)


def terminal_values(params: ModelParams, cfg: SimConfig) -> np.ndarray:
    """Time-T log-prices only; O(n_paths) memory, same draws as simulate."""
    x, _ = _run(params, cfg, store=False)
    return x


def mc_transition_prob(params: ModelParams, cfg: SimConfig, direction: Direction) -> MCEstimate:
    """Fraction of paths ending on the target side of x_star at time T.

    Terminal-time comparison (X_T <= x_star counts as distressed, >=
    as healthy), matching the closed-form definition; not a
    first-passage statistic. std_error is sqrt(p (1 - p) / n).
    """
    if direction is Direction.HEALTHY_TO_DISTRESSED and cfg.x0 < params.x_star:
        raise ValidationError(
            f"healthy-to-distressed requires x0 >= x_star, got x0={cfg.x0} < {params.x_star}"
        )
    if direction is Direction.DISTRESSED_TO_HEALTHY and cfg.x0 > params.x_star:
        raise ValidationError(
            f"distressed-to-healthy requires x0 <= x_star, got x0={cfg.x0} > {params.x_star}"
        )
    xt = terminal_values(params, cfg)
    if direction is Direction.HEALTHY_TO_DISTRESSED:
        hits = xt <= params.x_star
    else:
        hits = xt >= params.x_star
    p = float(np.mean(hits))
    se = math.sqrt(p * (1.0 - p) / cfg.n_paths)
    return MCEstimate(value=p, std_error=se, n=cfg.n_paths)


def mc_density_histogram(ensemble: PathEnsemble, bins=50, bin_range=None) -> Histogram:
    """Normalized histogram of terminal values X_T.

    bins/bin_range follow numpy.histogram; density integrates to 1 over
    the covered range (samples outside explicit bins are excluded and
    the remainder renormalized). Rejects empty ensembles and degenerate
    (non-increasing or zero-width) bins.
    """
    if ensemble.paths.size == 0 or ensemble.paths.shape[0] < 1:
        raise ValidationError("empty ensemble")
    terminal = ensemble.paths[:, -1]
    if np.ndim(bins) == 1:
        edges = np.asarray(bins, dtype=float)
        if edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValidationError("bin edges must be strictly increasing")
    elif bin_range is not None:
        lo, hi = bin_range
        if not (hi > lo):
            raise ValidationError(f"degenerate bin range ({lo}, {hi})")
    density, edges = np.histogram(terminal, bins=bins, range=bin_range, density=True)
    if not np.all(np.isfinite(density)):
        raise ValidationError("histogram is degenerate (no samples in range?)")
    return Histogram(edges=edges, density=density, n_samples=terminal.size)


def write_ensemble_csv(ensemble: PathEnsemble, path) -> None:
    """Dump an ensemble as rows of (path_id, step, x) for offline inspection."""
    n_paths, n_times = ensemble.paths.shape
    with open(path, "w", newline="") as fh:
        fh.write("path_id,step,x\n")
        for p in range(n_paths):
            row = ensemble.paths[p]
            for k in range(n_times):
                fh.write(f"{p},{k},{float(row[k])!r}\n")
