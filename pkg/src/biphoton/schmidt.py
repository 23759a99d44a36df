"""Schmidt decomposition of a sampled joint spectral amplitude and the
entropy of entanglement.

The amplitude is conjugated by the square roots of the quadrature weights
before the SVD so that the singular values approximate the continuum Schmidt
coefficients, independent of the grid spacing.
"""
from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np
import scipy.linalg

from .spectral import SpectralMatrix

DEFAULT_THRESHOLD = 1e-12
ORACLE_MAX_POINTS = 128


class ContractError(ValueError):
    """Input violates an operation's precondition."""


class DecompositionError(ArithmeticError):
    """Factorization failed."""


@dataclasses.dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``f(ws, wi) = sum_n sqrt(lam_n) * phase_n * psi_n(ws) * phi_n(wi)``.

    Each mode is phase-fixed so its largest-modulus sample is real positive;
    the leftover unit-modulus factor per mode is kept in ``phases``.
    """

    eigenvalues: np.ndarray
    signal_modes: np.ndarray  # (rank, n_s)
    idler_modes: np.ndarray  # (rank, n_i)
    phases: np.ndarray
    omega_s: np.ndarray
    omega_i: np.ndarray
    w_s: np.ndarray
    w_i: np.ndarray
    threshold: float
    total: float  # sum of all eigenvalues before truncation
    tail_mass: float

    @property
    def rank(self) -> int:
        return int(self.eigenvalues.size)

    def schmidt_number(self) -> float:
        return float(1.0 / np.sum(self.eigenvalues ** 2))

    def reconstruct(self, n_modes: int | None = None) -> np.ndarray:
        k = self.rank if n_modes is None else n_modes
        c = np.sqrt(self.eigenvalues[:k]) * self.phases[:k]
        return np.einsum("n,nj,nk->jk", c, self.signal_modes[:k], self.idler_modes[:k])

    def to_dict(self, n_modes: int | None = None) -> dict:
        k = self.rank if n_modes is None else min(n_modes, self.rank)
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "threshold": self.threshold,
            "tail_mass": self.tail_mass,
            "omega_s": self.omega_s.tolist(),
            "omega_i": self.omega_i.tolist(),
            "modes": [
                {
                    "index": n,
                    "phase": [self.phases[n].real, self.phases[n].imag],
                    "signal_re": self.signal_modes[n].real.tolist(),
                    "signal_im": self.signal_modes[n].imag.tolist(),
                    "idler_re": self.idler_modes[n].real.tolist(),
                    "idler_im": self.idler_modes[n].imag.tolist(),
                }
                for n in range(k)
            ],
        }

    def to_json(self, path, n_modes: int | None = None) -> None:
        Path(path).write_text(json.dumps(self.to_dict(n_modes)), encoding="utf-8")


@dataclasses.dataclass(frozen=True)
class EntropyValue:
    S: float  # bits
    rank: int
    tail_mass: float


@dataclasses.dataclass(frozen=True, eq=False)
class KernelOracleResult:
    """Explicit one-photon correlation kernels and their eigen-solutions."""

    k1: np.ndarray
    k2: np.ndarray
    eigenvalues_k1: np.ndarray
    eigenvalues_k2: np.ndarray
    signal_modes: np.ndarray
    idler_modes: np.ndarray


@dataclasses.dataclass(frozen=True)
class ModeProfile:
    index: int
    omega_s: np.ndarray
    signal: np.ndarray  # |psi_n|^2
    omega_i: np.ndarray
    idler: np.ndarray  # |phi_n|^2


def _fix_phase(modes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    idx = np.argmax(np.abs(modes), axis=1)
    peak = modes[np.arange(modes.shape[0]), idx]
    ph = peak / np.abs(peak)
    out = modes / ph[:, None]
    out[np.arange(modes.shape[0]), idx] = np.abs(peak)
    return out, ph


def schmidt_decompose(m: SpectralMatrix, threshold: float = DEFAULT_THRESHOLD) -> SchmidtDecomposition:
    if not m.normalized:
        raise ContractError("schmidt_decompose needs a normalized SpectralMatrix")
    rs, ri = np.sqrt(m.w_s), np.sqrt(m.w_i)
    a = rs[:, None] * m.amplitude * ri[None, :]
    try:
        u, s, vh = scipy.linalg.svd(a, full_matrices=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DecompositionError(
            f"SVD failed on {a.shape} matrix (finite={np.all(np.isfinite(a))}, "
            f"max|a|={np.nanmax(np.abs(a)):.3g}): {exc}") from exc
    lam = s * s
    total = float(lam.sum())
    keep = lam >= threshold
    keep[0] = True
    rank = int(np.count_nonzero(keep))
    psi, ph_s = _fix_phase((u[:, :rank] / rs[:, None]).T)
    phi, ph_i = _fix_phase(vh[:rank] / ri[None, :])
    return SchmidtDecomposition(
        eigenvalues=lam[:rank],
        signal_modes=psi,
        idler_modes=phi,
        phases=ph_s * ph_i,
        omega_s=m.dws,
        omega_i=m.dwi,
        w_s=m.w_s,
        w_i=m.w_i,
        threshold=threshold,
        total=total,
        tail_mass=float(lam[rank:].sum()),
    )


def entropy(d: SchmidtDecomposition) -> EntropyValue:
    """Von Neumann entropy -sum lam log2 lam (bits); 0 log 0 := 0."""
    lam = d.eigenvalues[d.eigenvalues > 0]
    S = float(-np.sum(lam * np.log2(lam)))
    return EntropyValue(S=max(S, 0.0), rank=d.rank, tail_mass=d.tail_mass)


def entropy_bits(eigenvalues) -> float:
    lam = np.asarray(eigenvalues, dtype=float)
    lam = lam[lam > 0]
    return max(float(-np.sum(lam * np.log2(lam))), 0.0)


def kernel_eig_oracle(m: SpectralMatrix, n_modes: int | None = None) -> KernelOracleResult:
    """Brute-force eigen-solution of the discretized K1/K2 kernels.

    Test oracle only: builds dense kernels, so grids are capped at 128 points.
    """
    ns, ni = m.amplitude.shape
    if max(ns, ni) > ORACLE_MAX_POINTS:
        raise ContractError(f"kernel oracle refuses grids above {ORACLE_MAX_POINTS} points")
    f = m.amplitude
    k1 = (f * m.w_i[None, :]) @ f.conj().T
    k2 = f.T @ (m.w_s[:, None] * f.conj())
    rs, ri = np.sqrt(m.w_s), np.sqrt(m.w_i)
    h1 = rs[:, None] * k1 * rs[None, :]
    h2 = ri[:, None] * k2 * ri[None, :]
    e1, v1 = np.linalg.eigh(0.5 * (h1 + h1.conj().T))
    e2, v2 = np.linalg.eigh(0.5 * (h2 + h2.conj().T))
    e1, v1 = e1[::-1], v1[:, ::-1]
    e2, v2 = e2[::-1], v2[:, ::-1]
    k = min(ns, ni) if n_modes is None else n_modes
    psi, _ = _fix_phase((v1[:, :k] / rs[:, None]).T)
    phi, _ = _fix_phase((v2[:, :k] / ri[:, None]).T)
    return KernelOracleResult(k1, k2, e1[:k], e2[:k], psi, phi)


def mode_profiles(d: SchmidtDecomposition, n: int) -> ModeProfile:
    """Intensity profiles |psi_n|^2 and |phi_n|^2 (unit weighted norm)."""
    if not 0 <= n < d.rank:
        raise IndexError(f"mode {n} out of range (rank {d.rank})")
    return ModeProfile(n, d.omega_s, np.abs(d.signal_modes[n]) ** 2,
                       d.omega_i, np.abs(d.idler_modes[n]) ** 2)


def count_peaks(profile: np.ndarray, rel_height: float = 1e-3) -> int:
    """Number of strict local maxima above ``rel_height`` times the maximum."""
    y = np.asarray(profile, dtype=float)
    floor = rel_height * y.max()
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]) & (y[1:-1] > floor)
    return int(np.count_nonzero(inner))


def peak_to_valley(profile: np.ndarray) -> float:
    """Ratio of the smallest local maximum to the deepest interior minimum
    between the outermost maxima; inf when there is a single peak."""
    y = np.asarray(profile, dtype=float)
    inner = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]) & (y[1:-1] > 1e-3 * y.max())) + 1
    if inner.size < 2:
        return float("inf")
    valley = y[inner[0]:inner[-1] + 1].min()
    return float(y[inner].min() / max(valley, np.finfo(float).tiny))


def write_mode_csv(path, omega: np.ndarray, abs2: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["omega", "abs2"])
        for w, v in zip(omega, abs2):
            out.writerow([repr(float(w)), repr(float(v))])
