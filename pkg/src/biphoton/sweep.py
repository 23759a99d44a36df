"""Entropy-versus-range series, saturating-exponential extrapolation and
one-dimensional parameter sweeps."""
from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import json
import logging
import math
import os
import time
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .params import PhysicalParams
from .schmidt import entropy, schmidt_decompose
from .spectral import SpectralGridSpec, build_spectral_matrix

log = logging.getLogger(__name__)

DEFAULT_RANGES = (25.0, 50.0, 75.0, 100.0, 125.0, 150.0)
DEFAULT_DENSITY = 511 / 300  # grid intervals per gamma3, i.e. 512 points on +-150
FIXED_RANGE = 150.0
SWEEP_AXES = ("temperature", "gamma3N_ratio", "tau")
WIDE_CI_WARNING = 0.10


class FitError(RuntimeError):
    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class RangeEvaluationError(RuntimeError):
    def __init__(self, message, half_range):
        super().__init__(message)
        self.half_range = half_range


@dataclasses.dataclass(frozen=True)
class EntropySeries:
    R: tuple
    S: tuple
    params: PhysicalParams | None = None

    def __post_init__(self):
        r = tuple(float(x) for x in self.R)
        s = tuple(float(x) for x in self.S)
        if len(r) != len(s):
            raise ValueError("R and S must have equal length")
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("R must be strictly increasing")
        if any(x < 0 for x in s):
            raise ValueError("entropies must be nonnegative")
        object.__setattr__(self, "R", r)
        object.__setattr__(self, "S", s)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["R", "S"])
            for r, s in zip(self.R, self.S):
                out.writerow([repr(r), repr(s)])

    @classmethod
    def from_csv(cls, path) -> "EntropySeries":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or not {"R", "S"} <= set(rows[0]):
            raise ValueError(f"{path}: expected columns R,S")
        return cls(tuple(float(r["R"]) for r in rows), tuple(float(r["S"]) for r in rows))


@dataclasses.dataclass(frozen=True)
class AsymptoteFit:
    a: float
    beta: float
    a_ci95: float
    beta_ci95: float
    residual_norm: float
    iterations: int
    n_points: int

    @property
    def wide(self) -> bool:
        return self.a_ci95 > WIDE_CI_WARNING * abs(self.a)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _model(R, a, beta):
    e = np.exp(-beta * R)
    return a * (1.0 - e), np.column_stack([1.0 - e, a * R * e])


def _initial_guess(R, S):
    a0 = float(S.max())
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.log(1.0 - S[:2] / a0)
    beta0 = -(y[1] - y[0]) / (R[1] - R[0])
    if not (np.isfinite(beta0) and beta0 > 0):
        beta0 = -y[0] / R[0] if np.isfinite(y[0]) and y[0] < 0 else np.nan
    if not (np.isfinite(beta0) and beta0 > 0):
        beta0 = 1.0 / float(np.median(R))
    return a0, float(beta0)


def fit_asymptote(series: EntropySeries, *, max_iter: int = 200, xtol: float = 1e-10) -> AsymptoteFit:
    """Least-squares fit of S(R) = a (1 - exp(-beta R)) by Levenberg-Marquardt.

    Starts from a = max S with beta from the log-linearized first two points.
    Confidence half-widths use the linearized covariance and the Student t
    quantile with n - 2 degrees of freedom.
    """
    R = np.asarray(series.R, dtype=float)
    S = np.asarray(series.S, dtype=float)
    n = R.size
    if n < 4:
        raise ValueError(f"fit_asymptote needs at least 4 points, got {n}")
    if np.ptp(S) == 0:
        raise FitError("flat entropy series: model is rank deficient")
    p = np.array(_initial_guess(R, S))
    mu = 1e-3
    fval, J = _model(R, *p)
    r = S - fval
    cost = r @ r
    trace = []
    for it in range(1, max_iter + 1):
        JTJ = J.T @ J
        g = J.T @ r
        while True:
            A = JTJ + mu * np.diag(np.diag(JTJ))
            try:
                step = np.linalg.solve(A, g)
            except np.linalg.LinAlgError:
                raise FitError("singular normal matrix", trace) from None
            trial = p + step
            f_t, J_t = _model(R, *trial)
            r_t = S - f_t
            cost_t = r_t @ r_t
            if np.isfinite(cost_t) and cost_t <= cost:
                mu = max(mu / 3.0, 1e-12)
                break
            mu *= 4.0
            if mu > 1e12:
                step = np.zeros(2)
                trial, f_t, J_t, r_t, cost_t = p, fval, J, r, cost
                break
        trace.append((it, *trial, cost_t))
        small = np.all(np.abs(step) <= xtol * np.maximum(np.abs(trial), 1e-300))
        p, fval, J, r, cost = trial, f_t, J_t, r_t, cost_t
        if small:
            break
    else:
        raise FitError(f"no convergence in {max_iter} iterations", trace)
    a, beta = p
    dof = n - 2
    s2 = cost / dof
    try:
        cov = s2 * np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        raise FitError("singular normal matrix at solution", trace) from None
    q = stats.t.ppf(0.975, dof)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return AsymptoteFit(float(a), float(beta), float(q * se[0]), float(q * se[1]),
                        float(math.sqrt(cost)), it, n)


def grid_for_range(half_range: float, density: float = DEFAULT_DENSITY) -> SpectralGridSpec:
    """Grid on +-half_range with a fixed number of intervals per gamma3."""
    return SpectralGridSpec(half_range, max(16, int(round(2 * half_range * density)) + 1))


def entropy_at(params: PhysicalParams, grid: SpectralGridSpec, evaluator: str = "analytic") -> float:
    return entropy(schmidt_decompose(build_spectral_matrix(params, grid, evaluator))).S


def entropy_vs_range(params: PhysicalParams, ranges: Sequence[float] = DEFAULT_RANGES,
                     density: float = DEFAULT_DENSITY, evaluator: str = "analytic") -> EntropySeries:
    ranges = [float(r) for r in ranges]
    if any(r <= 0 for r in ranges) or ranges != sorted(ranges):
        raise ValueError("ranges must be positive and sorted")
    out = []
    for R in ranges:
        try:
            out.append(entropy_at(params, grid_for_range(R, density), evaluator))
        except Exception as exc:  # noqa: BLE001 - re-raised with the range attached
            raise RangeEvaluationError(f"entropy at R={R:g} failed: {exc}", R) from exc
    return EntropySeries(tuple(ranges), tuple(out), params)


@dataclasses.dataclass
class SweepRow:
    axis_value: float
    S: float
    a: float | None = None
    beta: float | None = None
    a_ci95: float | None = None
    beta_ci95: float | None = None
    grid_n: int = 0
    range: float = FIXED_RANGE
    error: str | None = None
    warning: str | None = None
    series: EntropySeries | None = None


@dataclasses.dataclass
class SweepResult:
    axis: str
    values: tuple
    mode: str
    scheme: str
    evaluator: str
    rows: list
    runtime: float = 0.0

    @property
    def S(self) -> np.ndarray:
        return np.array([r.S for r in self.rows], dtype=float)

    @property
    def failed(self) -> bool:
        return any(r.error for r in self.rows)

    CSV_COLUMNS = ("axis_value", "S", "a", "beta", "a_ci95", "beta_ci95", "grid_n", "range")

    def to_csv(self, path) -> None:
        def fmt(v):
            if v is None or (isinstance(v, float) and not math.isfinite(v)):
                return "nan"
            return repr(v)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(self.CSV_COLUMNS)
            for row in self.rows:
                out.writerow([fmt(getattr(row, c)) for c in self.CSV_COLUMNS])

    def to_dict(self, include_runtime: bool = True) -> dict:
        rows = []
        for row in self.rows:
            d = {c: getattr(row, c) for c in self.CSV_COLUMNS}
            d["error"] = row.error
            d["warning"] = row.warning
            if row.series is not None:
                d["series"] = {"R": list(row.series.R), "S": list(row.series.S)}
            rows.append(d)
        return {
            "axis": self.axis,
            "values": list(self.values),
            "mode": self.mode,
            "scheme": self.scheme,
            "evaluator": self.evaluator,
            "runtime": self.runtime if include_runtime else None,
            "rows": rows,
        }

    def to_json(self, path, include_runtime: bool = True) -> None:
        Path(path).write_text(json.dumps(self.to_dict(include_runtime), indent=2, allow_nan=True),
                              encoding="utf-8")


def _sweep_point(axis, value, base, mode, ranges, density, evaluator):
    params = base.replace(**{axis: value})
    if mode == "fixed_range":
        grid = grid_for_range(FIXED_RANGE, density)
        return SweepRow(value, entropy_at(params, grid, evaluator), grid_n=grid.n_points,
                        range=FIXED_RANGE)
    series = entropy_vs_range(params, ranges, density, evaluator)
    fit = fit_asymptote(series)
    row = SweepRow(value, fit.a, fit.a, fit.beta, fit.a_ci95, fit.beta_ci95,
                   grid_for_range(ranges[-1], density).n_points, ranges[-1], series=series)
    if fit.wide:
        row.warning = f"95% half-width on a is {fit.a_ci95 / fit.a:.0%} of a"
        log.warning("%s=%g: %s", axis, value, row.warning)
    return row


def default_workers() -> int:
    env = os.environ.get("BIPHOTON_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer BIPHOTON_THREADS=%r", env)
    return os.cpu_count() or 1


def run_sweep(axis: str, values: Sequence[float], base: PhysicalParams | None = None,
              mode: str = "asymptotic", *, ranges: Sequence[float] = DEFAULT_RANGES,
              density: float = DEFAULT_DENSITY, evaluator: str = "analytic",
              workers: int | None = None) -> SweepResult:
    """Entropy along one parameter axis; a failing point is recorded, not raised."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    if mode not in ("fixed_range", "asymptotic"):
        raise ValueError(f"unknown sweep mode {mode!r}")
    values = [float(v) for v in values]
    if not values:
        raise ValueError("sweep needs at least one value")
    diffs = np.diff(values)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("sweep values must be strictly monotone")
    base = base or PhysicalParams()
    ranges = tuple(float(r) for r in ranges)
    t0 = time.perf_counter()

    def task(v):
        try:
            return _sweep_point(axis, v, base, mode, ranges, density, evaluator)
        except Exception as exc:  # noqa: BLE001 - per-point failure is data
            log.error("%s=%g failed: %s", axis, v, exc)
            return SweepRow(v, float("nan"), error=f"{type(exc).__name__}: {exc}")

    workers = workers or default_workers()
    if workers == 1 or len(values) == 1:
        rows = [task(v) for v in values]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(task, values))
    return SweepResult(axis, tuple(values), mode, base.scheme.value, evaluator, rows,
                       time.perf_counter() - t0)
