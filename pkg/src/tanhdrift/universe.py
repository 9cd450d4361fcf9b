"""Synthetic universe generation and universe file I/O.

Draws per-name model parameters from configured ranges, simulates daily
prices with the seeded integrator (dt = 1/252), prices spreads off the
asymptotic default probability, and writes a desk-style directory:

    out_dir/
      manifest.csv          name,price_file,spread_file (relative paths)
      truth.csv             name,nu,sigma,s_star,s0
      prices/<name>.csv     date,price
      spreads/<name>.csv    date,price,spread_bps

Days where a simulated price dips to or below S_star are omitted from
the spread file (the linearized spread relation only holds in the
healthy regime); prices are written for every day. Everything is a
deterministic function of the seed, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cds import SpreadModelConfig, synth_spread
from .errors import DataError, ValidationError
from .mc import SimConfig, simulate
from .model import ModelParams

__all__ = [
    "UniverseSpec",
    "generate_universe",
    "trading_dates",
    "load_manifest",
    "load_price_series",
    "load_truth",
]

log = logging.getLogger(__name__)

_MANIFEST_HEADER = ["name", "price_file", "spread_file"]
_TRUTH_HEADER = ["name", "nu", "sigma", "s_star", "s0"]
_PRICE_HEADER = ["date", "price"]


@dataclass(frozen=True)
class UniverseSpec:
    """Configuration of a synthetic universe draw."""

    n_names: int
    days: int
    seed: int
    start_date: dt.date = dt.date(2020, 1, 1)
    nu_range: tuple[float, float] = (0.3, 3.0)
    sigma_range: tuple[float, float] = (0.2, 0.4)
    s_star_range: tuple[float, float] = (20.0, 80.0)
    ratio_range: tuple[float, float] = (5.0, 15.0)  # S0 / S_star
    noise_sigma: float = 0.0
    recovery_rate: float = 0.4
    maturity: float = 5.0

    def __post_init__(self) -> None:
        if self.n_names < 1:
            raise ValidationError(f"n_names must be >= 1, got {self.n_names}")
        if self.days < 2:
            raise ValidationError(f"days must be >= 2, got {self.days}")
        for label, (lo, hi) in (
            ("nu_range", self.nu_range),
            ("sigma_range", self.sigma_range),
            ("s_star_range", self.s_star_range),
            ("ratio_range", self.ratio_range),
        ):
            if not (lo <= hi):
                raise ValidationError(f"{label} must be ascending, got ({lo}, {hi})")
        if self.nu_range[0] < 0:
            raise ValidationError("nu_range must be nonnegative")
        if self.sigma_range[0] <= 0:
            raise ValidationError("sigma_range must be positive")
        if self.s_star_range[0] <= 0:
            raise ValidationError("s_star_range must be positive")
        if self.ratio_range[0] <= 1.0:
            raise ValidationError(
                f"ratio_range min must be > 1 (S0 > S_star), got {self.ratio_range[0]}"
            )
        if self.noise_sigma < 0:
            raise ValidationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def trading_dates(start: dt.date, n: int) -> list[dt.date]:
    """n consecutive weekdays starting at the first weekday >= start."""
    out: list[dt.date] = []
    d = start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def generate_universe(spec: UniverseSpec, out_dir) -> dict:
    """Write a synthetic universe under out_dir; returns a small summary."""
    out = Path(out_dir)
    (out / "prices").mkdir(parents=True, exist_ok=True)
    (out / "spreads").mkdir(parents=True, exist_ok=True)
    cfg = SpreadModelConfig(recovery_rate=spec.recovery_rate, maturity=spec.maturity)
    rng = np.random.default_rng(spec.seed)
    n = spec.n_names
    nus = rng.uniform(*spec.nu_range, n)
    sigmas = rng.uniform(*spec.sigma_range, n)
    s_stars = rng.uniform(*spec.s_star_range, n)
    ratios = rng.uniform(*spec.ratio_range, n)
    sim_seeds = rng.integers(0, 2**62, size=n)
    noise_seeds = rng.integers(0, 2**62, size=n)
    dates = trading_dates(spec.start_date, spec.days)

    manifest_rows: list[tuple[str, str, str]] = []
    truth_rows: list[tuple[str, float, float, float, float]] = []
    skipped_days = 0
    for i in range(n):
        name = f"N{i:03d}"
        params = ModelParams.from_threshold_price(float(nus[i]), float(sigmas[i]), float(s_stars[i]))
        s0 = params.s_star * float(ratios[i])
        sim = SimConfig(
            n_paths=1,
            dt=1.0 / 252.0,
            horizon=spec.days / 252.0,
            seed=int(sim_seeds[i]),
            x0=math.log(s0),
        )
        path = simulate(params, sim).paths[0, : spec.days]
        prices = np.exp(path)
        noise = None
        if spec.noise_sigma > 0:
            xi = np.random.default_rng(int(noise_seeds[i])).standard_normal(spec.days)
            noise = np.exp(spec.noise_sigma * xi)

        price_rel = f"prices/{name}.csv"
        spread_rel = f"spreads/{name}.csv"
        with open(out / price_rel, "w", newline="") as fh:
            fh.write(",".join(_PRICE_HEADER) + "\n")
            for d, p in zip(dates, prices):
                fh.write(f"{d.isoformat()},{float(p)!r}\n")

        n_written = 0
        with open(out / spread_rel, "w", newline="") as fh:
            fh.write("date,price,spread_bps\n")
            for k, (d, p) in enumerate(zip(dates, prices)):
                if p <= params.s_star:
                    skipped_days += 1
                    continue
                z = synth_spread(params, cfg, float(p))
                if noise is not None:
                    z *= float(noise[k])
                fh.write(f"{d.isoformat()},{float(p)!r},{z!r}\n")
                n_written += 1
        if n_written == 0:
            log.warning("%s: never in the healthy regime, omitted from the manifest", name)
            continue
        manifest_rows.append((name, price_rel, spread_rel))
        truth_rows.append((name, float(nus[i]), float(sigmas[i]), float(s_stars[i]), s0))

    if not manifest_rows:
        raise DataError("no name produced any healthy-regime spread observation")
    with open(out / "manifest.csv", "w", newline="") as fh:
        fh.write(",".join(_MANIFEST_HEADER) + "\n")
        for row in manifest_rows:
            fh.write(",".join(row) + "\n")
    with open(out / "truth.csv", "w", newline="") as fh:
        fh.write(",".join(_TRUTH_HEADER) + "\n")
        for name, nu, sigma, s_star, s0 in truth_rows:
            fh.write(f"{name},{nu!r},{sigma!r},{s_star!r},{s0!r}\n")
    return {
        "n_names": len(manifest_rows),
        "days": spec.days,
        "skipped_distressed_days": skipped_days,
    }


def load_manifest(path) -> list[tuple[str, Path, Path]]:
    """Read manifest.csv; file paths are resolved relative to it."""
    path = Path(path)
    base = path.parent
    rows: list[tuple[str, Path, Path]] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _MANIFEST_HEADER:
            raise DataError(f"{path}: expected header {','.join(_MANIFEST_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            rows.append((row[0], base / row[1], base / row[2]))
    return rows


def load_price_series(path) -> list[tuple[dt.date, float]]:
    """Read a per-name price CSV with header date,price (ISO dates)."""
    path = Path(path)
    out: list[tuple[dt.date, float]] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _PRICE_HEADER:
            raise DataError(f"{path}: expected header {','.join(_PRICE_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out.append((dt.date.fromisoformat(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not out:
        raise DataError(f"{path}: no price rows")
    return out


def load_truth(path) -> dict[str, float]:
    """Read truth.csv into name -> true nu."""
    path = Path(path)
    out: dict[str, float] = {}
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _TRUTH_HEADER:
            raise DataError(f"{path}: expected header {','.join(_TRUTH_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out[row[0]] = float(row[1])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not out:
        raise DataError(f"{path}: no truth rows")
    return out
