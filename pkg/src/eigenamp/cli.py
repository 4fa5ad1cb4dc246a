"""Command-line front end: ``eigenamp {run,dlac-compare,sweep-n,sweep-eps,verify,fit}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import spectral
from .harness import (
    DEFAULT_EPS_VALUES,
    DEFAULT_N_VALUES,
    SweepSpec,
    build_model,
    dlac_path,
    fit_loglog,
    read_points_csv,
    run_convergence,
    sweep_eps,
    sweep_n,
)
from .spectral import RunConfig
from .verify import run_verification


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=None, help="Hilbert-space dimension")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--gap-exponent", type=float, default=1.0, help="gap D = 1/N**x")
    p.add_argument("--gap", type=float, default=None, help="fixed gap D (overrides --gap-exponent)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--engine", choices=("spectral", "statevector"), default="spectral")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--ground", choices=("min", "uniform"), default="min",
                   help="sampling of the lowest level in the random model")
    p.add_argument("--overlaps", choices=("rotation", "direct"), default="rotation",
                   help="random-model initial overlaps: rotated uniform state or direct random vector")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eigenamp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("run", "dlac-compare"):
        p = sub.add_parser(name, help="single convergence run" if name == "run" else "amplifier vs DLAC traces")
        _common(p)
        p.add_argument("--model", choices=("ladder", "random"), default="ladder")
        p.add_argument("--e0", type=float, default=None, help="ladder ground energy (default 1/(2N))")
        if name == "run":
            p.add_argument("--dlac", action="store_true", help="also write a DLAC trace from the same state")

    p = sub.add_parser("sweep-n", help="mean n_c versus N with log-log fit")
    _common(p)
    p.add_argument("--n-values", type=_floats, default=list(DEFAULT_N_VALUES))
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("sweep-eps", help="mean n_c versus epsilon with log-log fit")
    _common(p)
    p.add_argument("--eps-values", type=_floats, default=list(DEFAULT_EPS_VALUES))
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("verify", help="run the full invariant suite")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--inject-fault", type=float, default=0.0, help=argparse.SUPPRESS)

    p = sub.add_parser("fit", help="log-log least squares on a CSV of points")
    p.add_argument("input", type=Path, help="sweep table or two-column x,y CSV")
    p.add_argument("--out", type=Path, default=None)
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text)


def _cmd_run(args, with_dlac: bool) -> int:
    n = args.n if args.n is not None else 10_000
    spectrum, overlaps, rotation = build_model(
        args.model, n, e0=args.e0, gap=args.gap if args.gap is not None else 1.0 / n ** args.gap_exponent,
        seed=args.seed, ground=args.ground, overlap_model=args.overlaps,
    )
    config = RunConfig(tau=args.tau, epsilon=args.epsilon, max_iter=args.max_iter or 10_000_000, seed=args.seed)
    out = args.out or Path(f"trace.{args.format}")
    res = run_convergence(spectrum, overlaps, config, engine=args.engine, rotation=rotation,
                          with_dlac=with_dlac, out=out, fmt=args.format)
    msg = {"n_c": res.amplifier.n_c, "converged": res.amplifier.converged, "trace": str(out)}
    if res.dlac is not None:
        msg.update(dlac_n_c=res.dlac.n_c, dlac_converged=res.dlac.converged, dlac_trace=str(dlac_path(out)))
    print(json.dumps(msg))
    ok = res.amplifier.converged and (res.dlac is None or res.dlac.converged)
    return 0 if ok else 1


def _cmd_sweep(args, mode: str) -> int:
    kw = dict(
        mode=mode, gap_exponent=args.gap_exponent, gap=args.gap, epsilon=args.epsilon, trials=args.trials,
        master_seed=args.seed, tau=args.tau, engine=args.engine, ground=args.ground, overlap_model=args.overlaps,
    )
    if args.max_iter:
        kw["max_iter"] = args.max_iter
    if mode == "sweep-n":
        spec = SweepSpec(n_values=tuple(int(v) for v in args.n_values), **kw)
        table = sweep_n(spec, workers=args.workers)
    else:
        spec = SweepSpec(eps_values=tuple(args.eps_values), n=args.n or 10, **kw)
        table = sweep_eps(spec, workers=args.workers)
    _emit(table.to_csv(), args.out)
    fit = json.dumps(table.fit.to_dict())
    if args.out is not None:
        args.out.with_name(args.out.stem + ".fit.json").write_text(fit)
    print(fit, file=sys.stderr if args.out is None else sys.stdout)
    excluded = sum(p.trials_total - p.trials_converged for p in table.points)
    return 0 if excluded == 0 else 1


def _cmd_verify(args) -> int:
    previous = spectral.GAMMA_FAULT
    spectral.GAMMA_FAULT = args.inject_fault
    try:
        report = run_verification(runs=args.runs, seed=args.seed, samples=args.samples)
    finally:
        spectral.GAMMA_FAULT = previous
    text = json.dumps(report.to_dict(), indent=2)
    _emit(text, args.out)
    if args.out is not None:
        print(json.dumps({"ok": report.ok, **report.summary}))
    return 0 if report.ok else 1


def _cmd_fit(args) -> int:
    fit = fit_loglog(read_points_csv(args.input.read_text()))
    _emit(json.dumps(fit.to_dict()), args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args, args.dlac)
    if args.command == "dlac-compare":
        return _cmd_run(args, True)
    if args.command in ("sweep-n", "sweep-eps"):
        return _cmd_sweep(args, args.command)
    if args.command == "verify":
        return _cmd_verify(args)
    return _cmd_fit(args)


if __name__ == "__main__":
    sys.exit(main())
