"""Joint spectral amplitudes of the cascade biphoton, with and without
Doppler broadening, and their sampling onto normalized frequency grids.

Detunings are in units of gamma3 throughout.
"""
from __future__ import annotations

import csv
import dataclasses
import functools
import json
import math
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import roots_hermite

from .params import DerivedParams, PhysicalParams, derive
from .specfun import erfi_kernel

EVALUATORS = ("bare", "analytic", "quadrature")

QUAD_RTOL = 1e-9
QUAD_MIN_NODES = 16
QUAD_MAX_NODES = 65536


class QuadratureError(RuntimeError):
    """Gauss-Hermite velocity average failed to converge within the node budget."""

    def __init__(self, message, last, previous):
        super().__init__(message)
        self.last = last
        self.previous = previous


class NormalizationError(ArithmeticError):
    """Amplitude has zero (or non-finite) L2 norm on the grid."""


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("detunings must be finite")


def f_bare(dws, dwi, p: DerivedParams):
    """Doppler-free amplitude exp(-(dws+dwi)^2 tau^2/8) / (gammaN/2 - i dwi)."""
    dws = np.asarray(dws, dtype=float)
    dwi = np.asarray(dwi, dtype=float)
    _check_finite(dws, dwi)
    s = dws + dwi
    return np.exp(-(s * s) * p.tau ** 2 / 8.0) / (p.gammaN / 2.0 - 1j * dwi)


@functools.lru_cache(maxsize=None)
def _hermite_rule(n: int):
    t, w = roots_hermite(n)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def _gh_average(dws, dwi, p: DerivedParams, n: int):
    """n-node Gauss-Hermite estimate of the velocity average.

    The Maxwell-Boltzmann weight and the pulse Gaussian (both Gaussian in the
    velocity) are merged into a single Hermite weight; the Lorentzian
    denominator is left as the integrand.  Velocity u is in units of sigma.
    """
    tau2 = p.tau ** 2
    s = dws + dwi
    alpha = 0.5 + tau2 * p.kbar ** 2 / 8.0
    beta = tau2 * p.kbar * s / 4.0
    u0 = beta / (2.0 * alpha)
    amp = np.exp(beta * beta / (4.0 * alpha) - tau2 * s * s / 8.0) / math.sqrt(2.0 * math.pi * alpha)
    t, w = _hermite_rule(n)
    root_alpha = math.sqrt(alpha)
    u = u0[..., None] + t / root_alpha
    denom = p.gammaN / 2.0 - 1j * (dwi[..., None] - p.ki_signed * u)
    return amp * np.sum(w / denom, axis=-1)


def f_doppler_quadrature(dws, dwi, p: DerivedParams, *, rtol: float = QUAD_RTOL,
                         max_nodes: int = QUAD_MAX_NODES):
    """Velocity-averaged amplitude by adaptive Gauss-Hermite quadrature.

    The node count doubles from 16 until two successive estimates agree to
    ``rtol`` (relative) at every point.  T = 0 returns :func:`f_bare`.
    """
    dws, dwi = np.broadcast_arrays(np.asarray(dws, dtype=float), np.asarray(dwi, dtype=float))
    _check_finite(dws, dwi)
    if p.temperature == 0.0:
        return f_bare(dws, dwi, p)
    shape = dws.shape
    xs, xi = dws.ravel(), dwi.ravel()
    result = np.empty(xs.shape, dtype=complex)
    todo = np.arange(xs.size)
    n = QUAD_MIN_NODES
    prev = _gh_chunked(xs, xi, p, n)
    while todo.size:
        n *= 2
        if n > max_nodes:
            raise QuadratureError(
                f"Gauss-Hermite average not converged to {rtol:g} within {max_nodes} nodes "
                f"({todo.size} points left)", last=prev, previous=None)
        cur = _gh_chunked(xs[todo], xi[todo], p, n)
        scale = np.maximum(np.abs(cur), np.finfo(float).tiny)
        done = np.abs(cur - prev) <= rtol * scale
        result[todo[done]] = cur[done]
        if n == max_nodes and not np.all(done):
            raise QuadratureError(
                f"Gauss-Hermite average not converged to {rtol:g} within {max_nodes} nodes "
                f"({int(np.sum(~done))} points left)", last=cur[~done], previous=prev[~done])
        todo, prev = todo[~done], cur[~done]
    return result.reshape(shape)


_CHUNK_CELLS = 1 << 22


def _gh_chunked(xs, xi, p, n):
    step = max(1, _CHUNK_CELLS // n)
    if xs.size <= step:
        return _gh_average(xs, xi, p, n)
    return np.concatenate([_gh_average(xs[k:k + step], xi[k:k + step], p, n)
                           for k in range(0, xs.size, step)])


def doppler_argument(dws, dwi, p: DerivedParams):
    """Complex argument ``A`` of the closed-form velocity average.

    Uses the signed idler wavenumber, so the same expression covers both
    propagation schemes; ``Im A < 0`` always.
    """
    r = p.ki_signed / p.kbar
    b = p.b
    pref = math.sqrt(p.tau ** 2 / (8.0 * b))
    return pref * (b * r * dws + (b * r - 1.0) * dwi - 0.5j * p.gammaN) / r


def f_doppler_analytic(dws, dwi, p: DerivedParams):
    """Closed-form velocity-averaged amplitude (Faddeeva route)."""
    dws, dwi = np.broadcast_arrays(np.asarray(dws, dtype=float), np.asarray(dwi, dtype=float))
    _check_finite(dws, dwi)
    if p.temperature == 0.0:
        return f_bare(dws, dwi, p)
    x = (p.kbar * p.tau) ** 2
    one_minus_b = 4.0 / (x + 4.0)
    s = dws + dwi
    a = doppler_argument(dws, dwi, p)
    pref = -1j / (math.sqrt(2.0 * math.pi) * abs(p.ki_signed))
    return pref * np.exp(-p.tau ** 2 * one_minus_b * s * s / 8.0) * erfi_kernel(a)


_EVAL_FUNCS = {
    "bare": f_bare,
    "analytic": f_doppler_analytic,
    "quadrature": f_doppler_quadrature,
}


def evaluate(evaluator: str, dws, dwi, p: DerivedParams):
    try:
        fn = _EVAL_FUNCS[evaluator]
    except KeyError:
        raise ValueError(f"unknown evaluator {evaluator!r}; choose from {EVALUATORS}") from None
    return fn(dws, dwi, p)


@dataclasses.dataclass(frozen=True)
class SpectralGridSpec:
    half_range: float = 150.0
    n_points: int = 512

    def __post_init__(self):
        if not (math.isfinite(self.half_range) and self.half_range > 0):
            raise ValueError(f"half_range must be positive, got {self.half_range!r}")
        if int(self.n_points) != self.n_points or self.n_points < 16:
            raise ValueError(f"n_points must be an integer >= 16, got {self.n_points!r}")
        object.__setattr__(self, "half_range", float(self.half_range))
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_range / (self.n_points - 1)

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_range, self.half_range, self.n_points)

    def weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def to_dict(self) -> dict:
        return {"half_range": self.half_range, "n_points": self.n_points}


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralMatrix:
    """Amplitude sampled on a rectangular grid; rows follow dws, columns dwi."""

    grid: SpectralGridSpec
    dws: np.ndarray
    dwi: np.ndarray
    amplitude: np.ndarray
    w_s: np.ndarray
    w_i: np.ndarray
    normalized: bool
    evaluator: str = "custom"
    params: PhysicalParams | None = None

    def __post_init__(self):
        n = self.grid.n_points
        if self.amplitude.shape != (n, n) or self.dws.shape != (n,) or self.dwi.shape != (n,):
            raise ValueError("matrix dimensions do not match the grid")
        for arr in (self.dws, self.dwi, self.amplitude, self.w_s, self.w_i):
            arr.setflags(write=False)

    def norm2(self) -> float:
        return float(np.einsum("j,jk,k->", self.w_s, np.abs(self.amplitude) ** 2, self.w_i))

    def normalize(self) -> "SpectralMatrix":
        nrm2 = self.norm2()
        if not (math.isfinite(nrm2) and nrm2 > 0):
            raise NormalizationError(f"cannot normalize amplitude with squared norm {nrm2!r}")
        amp = self.amplitude / math.sqrt(nrm2)
        return dataclasses.replace(self, amplitude=amp, normalized=True)

    def modulus(self, peak_normalized: bool = True) -> np.ndarray:
        m = np.abs(self.amplitude)
        return m / m.max() if peak_normalized else m

    @classmethod
    def from_function(cls, fn: Callable, grid: SpectralGridSpec, *, normalize: bool = True,
                      evaluator: str = "custom", params: PhysicalParams | None = None):
        ax = grid.axis()
        s, i = np.meshgrid(ax, ax, indexing="ij")
        amp = np.asarray(fn(s, i), dtype=complex)
        w = grid.weights()
        m = cls(grid, ax, ax.copy(), amp, w, w.copy(), False, evaluator, params)
        return m.normalize() if normalize else m

    # serialization

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["dws", "dwi", "re", "im", "abs"])
            for j, ws in enumerate(self.dws):
                for k, wi in enumerate(self.dwi):
                    z = self.amplitude[j, k]
                    out.writerow([repr(float(ws)), repr(float(wi)), repr(float(z.real)),
                                  repr(float(z.imag)), repr(float(abs(z)))])

    @classmethod
    def from_csv(cls, path, *, normalized: bool = True, evaluator: str = "custom"):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        dws = np.unique(data[:, 0])
        dwi = np.unique(data[:, 1])
        n = dws.size
        amp = (data[:, 2] + 1j * data[:, 3]).reshape(n, dwi.size)
        grid = SpectralGridSpec(float(dws[-1]), n)
        return cls(grid, dws, dwi, amp, grid.weights(), grid.weights(), normalized, evaluator)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "evaluator": self.evaluator,
            "normalized": self.normalized,
            "params": self.params.to_dict() if self.params else None,
            "dws": self.dws.tolist(),
            "dwi": self.dwi.tolist(),
            "re": self.amplitude.real.ravel().tolist(),
            "im": self.amplitude.imag.ravel().tolist(),
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralMatrix":
        grid = SpectralGridSpec(**d["grid"])
        n = grid.n_points
        amp = (np.array(d["re"]) + 1j * np.array(d["im"])).reshape(n, n)
        params = PhysicalParams.from_dict(d["params"]) if d.get("params") else None
        return cls(grid, np.array(d["dws"], dtype=float), np.array(d["dwi"], dtype=float), amp,
                   grid.weights(), grid.weights(), bool(d["normalized"]), d["evaluator"], params)

    @classmethod
    def from_json(cls, path) -> "SpectralMatrix":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_spectral_matrix(params: PhysicalParams, grid: SpectralGridSpec | None = None,
                          evaluator: str = "analytic", *, normalize: bool = True) -> SpectralMatrix:
    """Sample an evaluator on the grid and (by default) normalize to unit L2 norm."""
    grid = grid or SpectralGridSpec()
    if evaluator not in EVALUATORS:
        raise ValueError(f"unknown evaluator {evaluator!r}; choose from {EVALUATORS}")
    dp = derive(params)
    return SpectralMatrix.from_function(
        lambda s, i: evaluate(evaluator, s, i, dp), grid,
        normalize=normalize, evaluator=evaluator, params=params)


def correlation_coefficient(m: SpectralMatrix) -> float:
    """Pearson correlation of (dws, dwi) under the density |f|^2 w_s w_i."""
    rho = np.abs(m.amplitude) ** 2 * np.outer(m.w_s, m.w_i)
    rho = rho / rho.sum()
    ps, pi = rho.sum(axis=1), rho.sum(axis=0)
    ms, mi = ps @ m.dws, pi @ m.dwi
    vs = ps @ (m.dws - ms) ** 2
    vi = pi @ (m.dwi - mi) ** 2
    cov = (m.dws - ms) @ rho @ (m.dwi - mi)
    return float(cov / math.sqrt(vs * vi))
