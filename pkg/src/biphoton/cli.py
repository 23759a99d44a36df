"""Command-line interface: ``biphoton spectrum|schmidt|sweep|fit``.

Exit codes: 0 ok, 2 configuration/input error, 3 numerical failure,
4 sweep finished with failed rows, 5 fit failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, svgplot
from .params import ConfigError, PhysicalParams
from .schmidt import (DecompositionError, entropy, mode_profiles, schmidt_decompose,
                      write_mode_csv)
from .spectral import (EVALUATORS, NormalizationError, QuadratureError, SpectralGridSpec,
                       build_spectral_matrix)
from .sweep import (DEFAULT_DENSITY, DEFAULT_RANGES, SWEEP_AXES, EntropySeries, FitError,
                    fit_asymptote, run_sweep)

log = logging.getLogger("biphoton")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PARTIAL, EXIT_FIT = 0, 2, 3, 4, 5


class NumericFailure(RuntimeError):
    pass


class _Run:
    """Tracks outputs of one command and writes the manifest last."""

    def __init__(self, args, params, grid):
        self.args = args
        self.params = params
        self.grid = grid
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.t0 = time.perf_counter()

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def finish(self, extra: dict | None = None) -> None:
        for name in self.outputs:
            with open(self.out / name, "rb") as fh:
                os.fsync(fh.fileno())
        manifest = {
            "tool": "biphoton",
            "version": __version__,
            "command": self.args.command,
            "argv": self.args.argv,
            "params": self.params.to_dict() if self.params else None,
            "grid": self.grid.to_dict() if self.grid else None,
            "evaluator": getattr(self.args, "evaluator", None),
            "outputs": list(self.outputs),
            "duration_s": None if self.args.reproducible else time.perf_counter() - self.t0,
        }
        if extra:
            manifest.update(extra)
        tmp = self.out / "manifest.json.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.out / "manifest.json")


def _resolve_params(args) -> PhysicalParams:
    data = PhysicalParams().to_dict()
    if args.config:
        data.update(PhysicalParams.from_json(args.config).to_dict())
    for key in ("temperature", "gamma3N_ratio", "tau", "scheme"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    return PhysicalParams.from_dict(data)


def _grid(args) -> SpectralGridSpec:
    try:
        return SpectralGridSpec(args.range, args.grid_n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _json_dump(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def cmd_spectrum(args) -> int:
    params = _resolve_params(args)
    grid = _grid(args)
    run = _Run(args, params, grid)
    m = build_spectral_matrix(params, grid, args.evaluator)
    extra = {}
    if args.check_analytic:
        ref = build_spectral_matrix(params, grid, "analytic", normalize=False)
        raw = build_spectral_matrix(params, grid, args.evaluator, normalize=False)
        a, q = ref.amplitude, raw.amplitude
        mask = np.abs(q) > 1e-12 * np.abs(q).max()
        worst = float(np.max(np.abs(a - q)[mask] / np.abs(q)[mask]))
        extra["analytic_check_max_rel"] = worst
        if worst > 1e-6:
            raise NumericFailure(f"analytic and {args.evaluator} amplitudes differ by {worst:.3g} (> 1e-6)")
    m.to_csv(run.path("spectrum.csv"))
    m.to_json(run.path("spectrum.json"))
    svgplot.heatmap(run.path("spectrum.svg"), m.dws, m.dwi, m.modulus().T,
                    title=f"|f_D|, T={params.temperature:g} K, {params.scheme.value}",
                    xlabel="signal detuning / Gamma3", ylabel="idler detuning / Gamma3",
                    timestamp=not args.reproducible)
    run.finish(extra)
    print(f"wrote {len(run.outputs)} files to {run.out}")
    return EXIT_OK


def cmd_schmidt(args) -> int:
    params = _resolve_params(args)
    grid = _grid(args)
    run = _Run(args, params, grid)
    m = build_spectral_matrix(params, grid, args.evaluator)
    d = schmidt_decompose(m)
    S = entropy(d)
    n = min(args.n_modes, d.rank)
    lam = d.eigenvalues[:n]
    with open(run.path("eigenvalues.csv"), "w", encoding="utf-8") as fh:
        fh.write("n,lambda\n")
        for k, v in enumerate(lam):
            fh.write(f"{k},{float(v)!r}\n")
    summary = {"entropy_bits": S.S, "rank": S.rank, "tail_mass": S.tail_mass,
               "schmidt_number": d.schmidt_number(), "eigenvalues": lam.tolist()}
    _json_dump(run.path("schmidt.json"), summary)
    d.to_json(run.path("modes.json"), n_modes=min(args.n_profiles, d.rank))
    sig, idl = [], []
    for k in range(min(args.n_profiles, d.rank)):
        prof = mode_profiles(d, k)
        write_mode_csv(run.path(f"mode{k}_signal.csv"), prof.omega_s, prof.signal)
        write_mode_csv(run.path(f"mode{k}_idler.csv"), prof.omega_i, prof.idler)
        sig.append({"x": prof.omega_s, "y": prof.signal, "label": f"n={k}", "markers": False})
        idl.append({"x": prof.omega_i, "y": prof.idler, "label": f"n={k}", "markers": False})
    stamp = not args.reproducible
    svgplot.bars(run.path("eigenvalues.svg"), lam, title=f"Schmidt eigenvalues, S={S.S:.4f} bits",
                 xlabel="mode index", ylabel="lambda_n", timestamp=stamp)
    svgplot.curves(run.path("modes_signal.svg"), sig, title="signal modes |psi_n|^2",
                   xlabel="signal detuning / Gamma3", ylabel="intensity", timestamp=stamp)
    svgplot.curves(run.path("modes_idler.svg"), idl, title="idler modes |phi_n|^2",
                   xlabel="idler detuning / Gamma3", ylabel="intensity", timestamp=stamp)
    run.finish({"entropy_bits": S.S})
    print(f"S = {S.S:.6f} bits; lambda = " + ", ".join(f"{v:.4g}" for v in lam))
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = _resolve_params(args)
    run = _Run(args, params, None)
    if not args.values:
        raise ConfigError("sweep needs --values")
    density = (args.grid_n - 1) / (2 * args.range)
    try:
        res = run_sweep(args.axis, args.values, params, args.mode, ranges=args.ranges,
                        density=density, evaluator=args.evaluator)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res.to_csv(run.path("sweep.csv"))
    res.to_json(run.path("sweep.json"), include_runtime=not args.reproducible)
    label = "asymptotic a" if args.mode == "asymptotic" else f"S at +-{res.rows[0].range:g}"
    series = {"x": list(res.values), "y": res.S, "label": label}
    if args.mode == "asymptotic":
        series["yerr"] = [r.a_ci95 if r.a_ci95 is not None else np.nan for r in res.rows]
    svgplot.curves(run.path("sweep.svg"), [series], title=f"entropy vs {args.axis} ({res.scheme})",
                   xlabel=args.axis, ylabel="S (bits)", timestamp=not args.reproducible)
    run.finish({"mode": args.mode, "axis": args.axis, "failed_rows": sum(bool(r.error) for r in res.rows)})
    for r in res.rows:
        msg = f"{args.axis}={r.axis_value:g}  S={r.S:.6f}"
        if r.a_ci95 is not None:
            msg += f"  (+-{r.a_ci95:.3g})"
        if r.error:
            msg += f"  FAILED: {r.error}"
        print(msg)
    return EXIT_PARTIAL if res.failed else EXIT_OK


def cmd_fit(args) -> int:
    try:
        series = EntropySeries.from_csv(args.series_file)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read series: {exc}") from exc
    if len(series.R) < 4:
        raise ConfigError(f"fit needs at least 4 points, {args.series_file} has {len(series.R)}")
    run = _Run(args, None, None)
    fit = fit_asymptote(series)
    report = fit.to_dict()
    report["max_S"] = max(series.S)
    report["wide_ci_warning"] = fit.wide
    _json_dump(run.path("fit.json"), report)
    run.finish()
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, *, spectral=True):
    p.add_argument("--config", help="JSON file with PhysicalParams fields")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--reproducible", action="store_true",
                   help="omit timestamps and durations so outputs are byte-identical")
    if not spectral:
        return
    p.add_argument("--grid-n", type=int, default=512, help="grid points per axis (default 512)")
    p.add_argument("--range", type=float, default=150.0,
                   help="half range of both detuning axes in units of Gamma3 (default 150)")
    p.add_argument("--scheme", choices=("co", "counter"), help="propagation scheme")
    p.add_argument("--evaluator", choices=EVALUATORS, default="analytic",
                   help="amplitude evaluator (default analytic)")
    p.add_argument("--temperature", type=float, help="temperature in K")
    p.add_argument("--gamma3N-ratio", dest="gamma3N_ratio", type=float,
                   help="superradiant enhancement Gamma3^N / Gamma3")
    p.add_argument("--tau", type=float, help="dimensionless pulse duration Gamma3 * tau")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="biphoton", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="sample |f_D| on a grid; CSV/JSON + SVG heatmap")
    _add_common(p)
    p.add_argument("--check-analytic", action="store_true",
                   help="fail (exit 3) if the chosen evaluator and the closed form differ by > 1e-6")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("schmidt", help="Schmidt eigenvalues, modes and entropy")
    _add_common(p)
    p.add_argument("--n-modes", type=int, default=10, help="eigenvalues to report (default 10)")
    p.add_argument("--n-profiles", type=int, default=3, help="mode profiles to write (default 3)")
    p.set_defaults(func=cmd_schmidt)

    p = sub.add_parser("sweep", help="entropy along one parameter axis")
    _add_common(p)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", type=float, nargs="+", required=True)
    p.add_argument("--mode", choices=("fixed_range", "asymptotic"), default="asymptotic")
    p.add_argument("--ranges", type=float, nargs="+", default=list(DEFAULT_RANGES),
                   help="half ranges used for the asymptotic fit")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit S(R) = a (1 - exp(-beta R)) to an R,S CSV file")
    p.add_argument("series_file")
    _add_common(p, spectral=False)
    p.set_defaults(func=cmd_fit)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (NumericFailure, QuadratureError, NormalizationError, DecompositionError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
