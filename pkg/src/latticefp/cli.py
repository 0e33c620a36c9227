"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .lattice import moments, parse_dist_spec, sample_pmf
from .modelfile import load_model
from .report import inverse_csv_text, pmf_csv_text, spectrum_csv_text, write_result
from .simulate import simulate_first_passage
from .smp import DEFAULT_MAX_N, first_passage_moments, first_passage_pmf
from .transform import Spectrum, dft_forward, inverse_raw

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_solve(args) -> int:
    model, defaults = load_model(args.model)
    epsilon = args.epsilon if args.epsilon is not None else defaults.get("epsilon", 1e-6)
    max_n = args.max_N if args.max_N is not None else defaults.get("max_N", DEFAULT_MAX_N)
    if args.bound in ("monotone", "periodic") and args.M is None:
        raise ValidationError(f"--bound {args.bound} requires --M (monotonicity onset index)")
    t0 = time.perf_counter()
    result = first_passage_pmf(
        model, args.source, args.target, epsilon,
        n_override=args.N, bound=args.bound, monotone_onset=args.M,
        max_n=max_n, threads=args.threads,
    )
    inputs = {
        "model": str(args.model), "source": args.source, "target": args.target,
        "epsilon": epsilon, "N_override": args.N, "bound": args.bound, "M": args.M,
        "max_N": max_n, "threads": args.threads,
    }
    report = write_result(result, args.out, inputs, plot=args.plot)
    cert = result.certificate
    print(f"{report['pmf_path']}: {report['rows']} rows, N={cert.N_used}, "
          f"method={cert.method}, total {result.timing['total_ms']:.1f} ms "
          f"(wall {1e3 * (time.perf_counter() - t0):.0f} ms)", file=sys.stderr)
    return EXIT_OK


def cmd_moments(args) -> int:
    model, _ = load_model(args.model)
    fp = first_passage_moments(model, args.source, args.target)
    doc = {
        "source": args.source,
        "target": args.target,
        "edges": [
            {"from": e.source, "to": e.target, "prob": e.prob,
             "dist": e.dist.to_json(), **moments(e.dist).to_json()}
            for e in model.edges
        ],
        "first_passage": fp.to_json(),
    }
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _read_spectrum(src, dt):
    try:
        text = sys.stdin.read() if src in (None, "-") else Path(src).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read spectrum CSV: {exc}") from None
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or not {"re", "im"} <= set(rows[0]):
        raise ValidationError("spectrum CSV needs 're' and 'im' columns")
    try:
        values = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
        if dt is None and "omega" in rows[0] and len(rows) > 1:
            dt = 1.0 / (len(rows) * float(rows[1]["omega"]))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad spectrum CSV: {exc}") from None
    return Spectrum(values, dt if dt is not None else 1.0)


def cmd_transform(args) -> int:
    if args.direction == "forward":
        if args.spec is None:
            raise ValidationError("forward transform needs a distribution spec")
        if args.N is None or args.N < 1:
            raise ValidationError("forward transform needs --N >= 1")
        dist = parse_dist_spec(args.spec)
        pmf = sample_pmf(dist, args.N, args.dt)
        spec = dft_forward(pmf)
        _emit(spectrum_csv_text(spec.values, spec.dt), args.out)
    else:
        spec = _read_spectrum(args.input, args.dt)
        if args.N is not None and args.N != spec.N:
            raise ValidationError(f"--N {args.N} does not match {spec.N} input rows")
        _emit(inverse_csv_text(inverse_raw(spec), spec.dt), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model, _ = load_model(args.model)
    sim = simulate_first_passage(model, args.source, args.target, args.runs, args.seed,
                                 threads=max(1, args.threads))
    _emit(pmf_csv_text(sim.pmf.values, sim.pmf.dt), args.out)
    print(f"runs={sim.runs} censored={sim.censored} mean={sim.mean:.6g}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="latticefp",
        description="First-passage PMFs of discrete-time semi-Markov processes via inverse DFT.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="first-passage PMF with error certificate")
    s.add_argument("model", help="model JSON file")
    s.add_argument("source")
    s.add_argument("target")
    s.add_argument("--epsilon", type=float, help="target tail probability (default 1e-6)")
    s.add_argument("--N", type=int, help="force the number of lattice points")
    s.add_argument("--bound", default="auto",
                   choices=["auto", "markov", "cantelli", "monotone", "periodic"])
    s.add_argument("--M", type=int, help="monotonicity onset index for monotone/periodic")
    s.add_argument("--max-N", dest="max_N", type=int)
    s.add_argument("--threads", type=int, default=1, help="0 = all cores")
    s.add_argument("--out", default="firstpassage", help="output prefix")
    s.add_argument("--plot", action="store_true", help="also write <out>.pmf.png")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("moments", help="edge and first-passage mean/variance as JSON")
    m.add_argument("model")
    m.add_argument("source")
    m.add_argument("target")
    m.set_defaults(func=cmd_moments)

    t = sub.add_parser("transform", help="forward DFT of a distribution, or inverse of a spectrum CSV")
    t.add_argument("spec", nargs="?", help="e.g. poisson:lambda=5, empirical:[0.5,0.5]")
    t.add_argument("--N", type=int)
    t.add_argument("--dt", type=float)
    t.add_argument("--direction", choices=["forward", "inverse"], default="forward")
    t.add_argument("--input", help="spectrum CSV for --direction inverse ('-' = stdin)")
    t.add_argument("--out", help="output file (default stdout)")
    t.set_defaults(func=cmd_transform)

    r = sub.add_parser("simulate", help="Monte Carlo first-passage PMF")
    r.add_argument("model")
    r.add_argument("source")
    r.add_argument("target")
    r.add_argument("--runs", type=int, default=100000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--out", help="output CSV (default stdout)")
    r.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
