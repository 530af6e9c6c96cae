"""Command-line entry point: ``onebitvar <command> ...``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, FormatError, NumericalError, OneBitVarError
from .experiments import (
    FULL_SWEEP_REPS,
    SWEEP_T,
    load_config,
    make_graph,
    run_table1,
    run_table2,
    run_table3,
    run_threshold_sweep,
    summarize,
    write_outputs,
)
from .model import model_from_json, model_to_dict, simulate, true_moments
from .quantize import read_record, sign_and_predominance, threshold_quantize, write_record

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("onebitvar")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def cmd_simulate(args) -> int:
    try:
        model = model_from_json(Path(args.model).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read model: {exc}") from exc
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad model file: {exc}") from exc
    z = simulate(model, args.T, burn_in=args.burn_in, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.save(out.with_suffix(".npy"), z)
    written = [out.with_suffix(".npy")]
    if args.scheme == "s1":
        if args.thresholds is not None:
            c = np.array(_floats(args.thresholds))
        elif args.eta is not None:
            c = np.array(_floats(args.eta)) * true_moments(model).sigmas
        else:
            raise ConfigError("scheme s1 needs --thresholds or --eta")
        if c.shape != (model.d,):
            raise ConfigError(f"need {model.d} thresholds, got {c.size}")
        rec = threshold_quantize(z, c)
    elif args.scheme == "s2":
        rec = sign_and_predominance(z, make_graph(args.graph, model.d))
    else:
        rec = None
    if rec is not None:
        write_record(rec, out.with_suffix(".bits"))
        written.append(out.with_suffix(".bits"))
    for path in written:
        print(path)
    return EXIT_OK


def cmd_estimate(args) -> int:
    from .scheme1 import estimate_model_s1
    from .scheme2 import estimate_model_s2

    try:
        rec = read_record(args.bits)
    except OSError as exc:
        raise ConfigError(f"cannot read record: {exc}") from exc
    if rec.thresholds is not None:
        res = estimate_model_s1(rec, args.p)
        if res.failed:
            flags = [f.value for f in res.flags]
            raise NumericalError(f"degenerate bit series: {flags}")
        out = {
            "scheme": "s1",
            "model": {"d": rec.d, "p": args.p, "A": res.coeff.tolist(), "Sigma_E": res.noise_cov.tolist()},
            "diagnostics": {
                "eta_hat": res.eta_hat.tolist(),
                "sigma_hat": res.sigma_hat.tolist(),
                "clamped_correlations": int(res.clamped.sum()),
                "unscaled_A": res.unscaled.a_tilde.tolist(),
            },
        }
    else:
        res = estimate_model_s2(rec, args.p, args.variant)
        out = {
            "scheme": "s2",
            "model_class": {"d": rec.d, "p": args.p, "A": res.coeff.tolist(), "Sigma_E": res.noise_cov.tolist()},
            "diagnostics": {
                "variant": res.variant.value,
                "ratios": res.ratios.r.tolist(),
                "clamped_pairs": [list(p) for p in res.clamped_pairs],
                "unscaled_A": res.unscaled.a_tilde.tolist(),
            },
        }
    out["T"] = rec.T
    out["version"] = __version__
    text = json.dumps(out, indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_RUNNERS = {"table1": run_table1, "table2": run_table2, "table3": run_table3}


def cmd_table(args) -> int:
    cfg = load_config(args.config, full=args.full)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.reps is not None:
        cfg.reps = cfg.model_count = args.reps
    cfg.validate()
    start = time.perf_counter()
    if args.command == "sweep":
        if args.full and args.reps is None:
            cfg.reps = FULL_SWEEP_REPS
        results = run_threshold_sweep(cfg, T=args.T or SWEEP_T)
    else:
        results = _RUNNERS[args.command](cfg)
    paths = write_outputs(args.command, cfg, results, args.out)
    for line in summarize(args.command, results):
        print(line)
    log.info("%s finished in %.1fs", args.command, time.perf_counter() - start)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracles import run_all

    ok = True
    for name, passed, detail in run_all(draws=args.draws, seed=args.seed or 0):
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onebitvar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a model and quantize the trajectory")
    sim.add_argument("--model", required=True, help="model JSON with keys d, p, A, Sigma_E")
    sim.add_argument("--T", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--burn-in", type=int, default=None)
    sim.add_argument("--scheme", choices=("none", "s1", "s2"), default="s2")
    sim.add_argument("--thresholds", help="comma-separated thresholds c_i (scheme s1)")
    sim.add_argument("--eta", help="comma-separated standard thresholds (scheme s1)")
    sim.add_argument("--graph", choices=("complete", "star", "path"), default="complete")
    sim.add_argument("--out", required=True, help="output prefix; writes .npy and .bits")
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="estimate a model from a bit record")
    est.add_argument("--bits", required=True)
    est.add_argument("--p", type=int, default=1)
    est.add_argument("--variant", choices=("simple", "optimized", "efficient", "log_lsq"), default="simple")
    est.add_argument("--out", default=None)
    est.set_defaults(func=cmd_estimate)

    for name, text in (("table1", "scheme 2 vs continuous least squares"),
                       ("table2", "table1 plus the variance decomposition"),
                       ("table3", "ratio variants on random models"),
                       ("sweep", "scheme 1 over a grid of standard thresholds")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", default=None, help="experiment config JSON (defaults built in)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--full", action="store_true", help="use the full replication counts")
        p.add_argument("--out", default=".", help="output directory")
        if name == "sweep":
            p.add_argument("--T", type=int, default=None)
        p.set_defaults(func=cmd_table)

    orc = sub.add_parser("oracle", help="run the Monte-Carlo and quadrature oracles")
    orc.add_argument("--draws", type=int, default=1_000_000)
    orc.add_argument("--seed", type=int, default=0)
    orc.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, FormatError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OneBitVarError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
