"""Command-line front end: ``blockmkl <command> [options]``.

Exit codes: 0 success, 1 usage, 2 I/O or parse error, 3 validation error
(bad dimensions or parameters), 4 solver hard failure, 5 training finished
without converging (the model is still written).

Every command that writes a file also writes ``<output>.manifest.json`` with
the resolved parameters, SHA-256 digests of the inputs, the seed, the tool
version and the wall-clock time.

A config file (``--config FILE``) holds ``key = value`` lines whose keys are
the long option names of the command (``max-iter`` or ``max_iter``); list
options take whitespace-separated values. Command-line flags win.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (BoundParams, format_report, generalization_bound,
                     literature_consistency_report, rademacher_bound)
from .kernels import (KernelSet, KernelSpec, check_psd, compute_gram, read_gram,
                      read_labels, write_gram)
from .model import (CrossKernelSet, evaluate_scores, load_model, predict_scores,
                    save_model)
from .objective import P_MAX, P_MIN, MklConfig
from .pipeline import format_sweep, run_sweep, train
from .solver import SolverConfig, SolverError
from .synth import Scenario, bayes_error, generate, write_dataset
from .weights import WeightRecoveryError

log = logging.getLogger("blockmkl")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVALID, EXIT_SOLVER, EXIT_NOT_CONVERGED = range(6)


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}", EXIT_USAGE)


# ---------------------------------------------------------------- values

def parse_p(text) -> float:
    """``1`` -> 64/63, ``inf`` -> 64, otherwise a real or fraction such as ``4/3``."""
    token = str(text).strip().lower()
    if token == "1":
        return P_MIN
    if token in ("inf", "infinity"):
        return P_MAX
    try:
        return float(Fraction(token))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid p {text!r}") from None


def _p_token_is_one(text) -> bool:
    return str(text).strip() == "1"


def _csv(conv):
    def parse(text):
        try:
            return [conv(t) for t in str(text).replace(",", " ").split()]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}: {exc}") from None
    return parse


def parse_seeds(text) -> list:
    """``0-19``, ``3``, or ``0,5,7``."""
    out = []
    for part in str(text).replace(",", " ").split():
        lo, dash, hi = part.partition("-")
        try:
            out.extend(range(int(lo), int(hi) + 1) if dash else [int(lo)])
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid seed list {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def _fmt(x) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------- config file

def read_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}", EXIT_IO) from None
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq or not key.strip():
            raise CliError(f"{path}:{lineno}: expected key = value", EXIT_IO)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, values: dict) -> None:
    """Install config values as parser defaults, converted like flags."""
    actions = {a.dest: a for a in parser._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, raw in values.items():
        act = actions.get(key) or actions.get(f"{key}_raw")
        if act is None:
            raise CliError(f"unknown config key {key!r}", EXIT_USAGE)
        if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            low = raw.lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise CliError(f"config key {key!r} expects a boolean", EXIT_USAGE)
            flag = low in ("1", "true", "yes", "on")
            defaults[act.dest] = flag if isinstance(act, argparse._StoreTrueAction) else not flag
            continue
        conv = act.type or str
        try:
            if act.nargs in ("+", "*"):
                defaults[act.dest] = [conv(t) for t in raw.split()]
            else:
                defaults[act.dest] = conv(raw)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise CliError(f"config key {key!r}: {exc}", EXIT_USAGE) from None
        act.required = False
    parser.set_defaults(**defaults)


def _config_location(argv):
    """``(command, config path)`` found by scanning argv ahead of parsing."""
    command = next((a for a in argv if not a.startswith("-")), None)
    path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
    return command, path


# ---------------------------------------------------------------- file helpers

def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _load(what, fn, *args, **kwargs):
    """Run a file reader, mapping its failures onto the I/O exit code."""
    try:
        return fn(*args, **kwargs)
    except OSError as exc:
        raise CliError(f"cannot read {what}: {exc.strerror or exc} "
                       f"({getattr(exc, 'filename', None) or args[0]})", EXIT_IO) from None
    except (ValueError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot parse {what}: {exc}", EXIT_IO) from None


def _check_writable(path):
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise CliError(f"output directory {parent} does not exist", EXIT_IO)


class Run:
    """Collects what goes into a run manifest."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.started = time.time()
        self.params = {k: _jsonable(v) for k, v in vars(args).items()
                       if k not in ("func", "command")}
        self.inputs = {}
        self.extra = {}

    def input(self, path):
        self.inputs[str(path)] = _digest(path)
        return path

    def manifest(self, output, seed=None) -> None:
        data = {
            "command": self.command,
            "params": self.params,
            "inputs": self.inputs,
            "seed": seed,
            "version": __version__,
            "wall_clock_seconds": round(time.time() - self.started, 6),
            **self.extra,
        }
        _atomic_write(f"{output}.manifest.json", json.dumps(data, indent=2, sort_keys=True) + "\n")


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


# ---------------------------------------------------------------- commands

def _mkl_config(args) -> MklConfig:
    if _p_token_is_one(args.p_raw) and args.mu == 0:
        raise CliError("p=1 is degenerate without the elastic-net term; "
                       "use --mu > 0 (elastic net) or a real p > 1", EXIT_INVALID)
    return MklConfig(p=args.p, mu=args.mu, c=args.c, loss=args.loss)


def _solver_config(args) -> SolverConfig:
    # sweep has no --seed: its seeds pick datasets, and the solver starts at the centre
    return SolverConfig(tol=args.tol, max_iter=args.max_iter, history=args.history,
                        seed=getattr(args, "seed", 0))


def cmd_gram(args, run: Run) -> int:
    spec = KernelSpec.parse(args.kernel, normalize=not args.no_normalize)
    if spec.kind == "precomputed":
        raise CliError("gram computes kernels from data; precomputed kernels are read directly",
                       EXIT_INVALID)
    data = _load("data", _read_data, run.input(args.data), spec.modality)
    other = None
    if args.other is not None:
        other = _load("data", _read_data, run.input(args.other), spec.modality)
    _check_writable(args.out)
    K = compute_gram(spec, data, other)
    if other is None and args.check_psd:
        rep = check_psd(K)
        if rep.is_psd is not None:
            print(f"psd={rep.is_psd} min_eigenvalue={_fmt(rep.min_eigenvalue)} "
                  f"threshold={_fmt(rep.threshold)}")
            run.extra["psd"] = {"is_psd": rep.is_psd, "min_eigenvalue": rep.min_eigenvalue}
    write_gram(args.out, K, binary=args.binary, cross=other is not None)
    run.manifest(args.out)
    return EXIT_OK


def _read_data(path, modality):
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if modality == "string":
        return [ln.strip() for ln in lines]
    rows = [[float(t) for t in ln.split()] for ln in lines]
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError("vector data needs one row per sample, all of equal length")
    return np.array(rows)


def _read_kernels(paths, names, run: Run) -> KernelSet:
    mats = [_load("kernel", read_gram, run.input(p)) for p in paths]
    names = names or [Path(p).stem for p in paths]
    if len(names) != len(mats):
        raise CliError(f"{len(names)} names for {len(mats)} kernels", EXIT_INVALID)
    if len(set(names)) != len(names):
        names = [f"k{m}" for m in range(len(mats))]
    return KernelSet.from_list(mats, names)


def cmd_train(args, run: Run) -> int:
    cfg = _mkl_config(args)
    run.params["p_effective"] = cfg.p
    scfg = _solver_config(args)
    kernels = _read_kernels(args.kernels, args.names, run)
    y = _load("labels", read_labels, run.input(args.labels))
    _check_writable(args.out)
    model, sol = train(kernels, y, cfg, scfg)
    save_model(model, args.out)
    run.extra["converged"] = bool(sol.converged)
    run.extra["status"] = sol.status
    run.extra["objective"] = sol.objective
    run.extra["duality_gap"] = sol.duality_gap
    run.manifest(args.out, seed=args.seed)
    print(f"status={sol.status} iterations={sol.iterations} objective={_fmt(sol.objective)} "
          f"duality_gap={_fmt(sol.duality_gap)}")
    if not sol.converged:
        log.warning("solver stopped without reaching tol=%g (projected gradient %.3g); "
                    "model written", scfg.tol, sol.projected_grad_norm)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_predict(args, run: Run) -> int:
    model = _load("model", load_model, run.input(args.model))
    cross = CrossKernelSet.from_list(
        [_load("cross kernel", read_gram, run.input(p), require_square=False)
         for p in args.cross])
    y = _load("labels", read_labels, run.input(args.labels)) if args.labels else None
    _check_writable(args.out)
    scores = predict_scores(model, cross)
    metrics = None
    if y is not None:
        metrics = evaluate_scores(scores, y, args.fpr_max)
    _atomic_write(args.out, "".join(f"{_fmt(s)}\n" for s in scores))
    if metrics is not None:
        run.extra["metrics"] = metrics
        _print_metrics(metrics)
    run.manifest(args.out)
    return EXIT_OK


def _print_metrics(metrics):
    for key, value in metrics.items():
        print(f"{key}={_fmt(value)}")


def cmd_eval(args, run: Run) -> int:
    scores = _load("scores", _read_scores, run.input(args.scores))
    y = _load("labels", read_labels, run.input(args.labels))
    metrics = evaluate_scores(scores, y, args.fpr_max)
    _print_metrics(metrics)
    if args.out:
        _check_writable(args.out)
        _atomic_write(args.out, "".join(f"{k},{_fmt(v)}\n" for k, v in metrics.items()))
        run.manifest(args.out)
    return EXIT_OK


def _read_scores(path):
    vals = [float(t) for t in Path(path).read_text(encoding="ascii").split()]
    return np.array(vals)


def cmd_weights(args, run: Run) -> int:
    model = _load("model", load_model, run.input(args.model))
    raw = model.theta.effective
    total = raw.sum()
    lines = ["kernel,theta_raw,theta_normalized\n"]
    for name, t in zip(model.kernel_names, raw):
        lines.append(f"{name},{_fmt(t)},{_fmt(t / total if total > 0 else 0.0)}\n")
    text = "".join(lines)
    if args.out:
        _check_writable(args.out)
        _atomic_write(args.out, text)
        run.manifest(args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bound(args, run: Run) -> int:
    if args.report:
        text = format_report(literature_consistency_report(
            args.M, args.n, tuple(args.c1_grid), args.lipschitz, args.delta,
            args.emp_risk), csv=args.csv)
    else:
        c2 = args.c2 if args.c2 is not None else 1.0 - args.c1
        params = BoundParams(M=args.M, n=args.n, p=args.p, q=args.q, c1=args.c1, c2=c2,
                             lipschitz=args.lipschitz, delta=args.delta,
                             emp_risk=args.emp_risk)
        r = rademacher_bound(params, sharpen=not args.no_sharpen)
        g = generalization_bound(params, r)
        text = (f"rademacher,generalization\n{_fmt(r)},{_fmt(g)}\n" if args.csv
                else f"rademacher={_fmt(r)}\ngeneralization={_fmt(g)}\n")
    if args.out:
        _check_writable(args.out)
        _atomic_write(args.out, text)
        run.manifest(args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _scenario(args, sparsity=0.0, seed=0) -> Scenario:
    return Scenario(M=args.M, block_dim=args.block_dim, sparsity=sparsity,
                    bayes_target=args.bayes_target, n_train=args.n_train,
                    n_test=args.n_test, seed=seed)


def cmd_synth(args, run: Run) -> int:
    scn = _scenario(args, args.sparsity, args.seed)
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc.strerror}", EXIT_IO) from None
    paths = write_dataset(generate(scn), out, binary=args.binary)
    run.extra["bayes_error"] = bayes_error(scn)
    run.extra["outputs"] = sorted(str(p) for v in paths.values()
                                  for p in (v if isinstance(v, list) else [v]))
    run.manifest(out / "dataset", seed=args.seed)
    print(f"bayes_error={_fmt(bayes_error(scn))}")
    return EXIT_OK


def cmd_sweep(args, run: Run) -> int:
    if any(_p_token_is_one(t) for t in args.p_raw.replace(",", " ").split()) and 0 in args.mu:
        raise CliError("p=1 is degenerate without the elastic-net term; "
                       "drop mu=0 or use a real p > 1", EXIT_INVALID)
    base = _scenario(args)
    if args.out:
        _check_writable(args.out)
    rows = run_sweep(base, args.sparsity, args.p, args.mu, args.seeds, c=args.c,
                     solver_cfg=_solver_config(args), loss=args.loss)
    text = format_sweep(rows)
    failed = sum(r.n_failed for r in rows)
    if failed:
        log.warning("%d cell runs failed", failed)
    if args.out:
        _atomic_write(args.out, text)
        run.manifest(args.out, seed=args.seeds)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _model_flags(sp):
    sp.add_argument("--p", dest="p_raw", default="2",
                    help="block-norm exponent: real, fraction, '1' (=64/63) or 'inf' (=64)")
    sp.add_argument("--mu", type=float, default=0.0)
    sp.add_argument("--c", type=float, default=1.0, help="loss weight C")
    sp.add_argument("--loss", choices=("hinge", "squared"), default="hinge")


def _solver_flags(sp):
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--max-iter", type=int, default=5000)
    sp.add_argument("--history", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)


def _scenario_flags(sp):
    sp.add_argument("--M", type=int, default=6, help="number of blocks / kernels")
    sp.add_argument("--block-dim", type=int, default=10)
    sp.add_argument("--bayes-target", type=float, default=0.1)
    sp.add_argument("--n-train", type=int, default=500)
    sp.add_argument("--n-test", type=int, default=2000)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blockmkl", description="Block-norm multiple kernel learning.")
    parser.add_argument("--version", action="version", version=f"blockmkl {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help, description=help)
        sp.add_argument("--config", help="key = value file supplying defaults for any flag")
        sp.set_defaults(func=func)
        return sp

    sp = add("gram", cmd_gram, "compute a (cross) Gram matrix from data")
    sp.add_argument("--kernel", required=True,
                    help="linear | rbf:<bw> | poly:<deg>[:<offset>] | spectrum:<k>")
    sp.add_argument("--data", required=True,
                    help="vectors (one whitespace-separated row per sample) or strings (one per line)")
    sp.add_argument("--other", help="second data set; writes the data x other cross kernel")
    sp.add_argument("--out", required=True)
    sp.add_argument("--binary", action="store_true")
    sp.add_argument("--no-normalize", action="store_true")
    sp.add_argument("--check-psd", action="store_true")

    sp = add("train", cmd_train, "train a block-norm MKL model")
    sp.add_argument("--kernels", nargs="+", required=True)
    sp.add_argument("--names", nargs="+")
    sp.add_argument("--labels", required=True)
    sp.add_argument("--out", required=True)
    _model_flags(sp)
    _solver_flags(sp)

    sp = add("predict", cmd_predict, "score test points with a trained model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--cross", nargs="+", required=True,
                    help="n_train x n_test cross kernels, in the model's kernel order")
    sp.add_argument("--labels", help="test labels; enables accuracy / AUC / partial AUC")
    sp.add_argument("--fpr-max", type=float, default=0.1)
    sp.add_argument("--out", required=True)

    sp = add("weights", cmd_weights, "print a model's kernel weights")
    sp.add_argument("--model", required=True)
    sp.add_argument("--out")

    sp = add("bound", cmd_bound, "evaluate the Rademacher / generalization bounds")
    sp.add_argument("--M", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float, default=1.0)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--c1", type=float, default=1.0)
    sp.add_argument("--c2", type=float, help="defaults to 1 - c1")
    sp.add_argument("--L", dest="lipschitz", type=float, default=1.0)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--emp-risk", type=float, default=0.0)
    sp.add_argument("--no-sharpen", action="store_true")
    sp.add_argument("--report", action="store_true",
                    help="print the l1 / l4/3 / l2 / elastic-net comparison table")
    sp.add_argument("--c1-grid", type=_csv(float), default=[1.0, 0.75, 0.5, 0.25, 0.0])
    sp.add_argument("--csv", action="store_true")
    sp.add_argument("--out")

    sp = add("synth", cmd_synth, "generate a synthetic block-sparse data set")
    _scenario_flags(sp)
    sp.add_argument("--sparsity", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--binary", action="store_true")
    sp.add_argument("--out-dir", required=True)

    sp = add("sweep", cmd_sweep, "synthetic sparsity sweep over p and mu")
    _scenario_flags(sp)
    sp.add_argument("--sparsity", type=_csv(float), default=[0.0, 1.0])
    sp.add_argument("--p", dest="p_raw", default="64/63,4/3,2,4,inf",
                    help="comma list of p values; the token 1 needs every --mu > 0")
    sp.add_argument("--mu", type=_csv(float), default=[0.0])
    sp.add_argument("--seeds", type=parse_seeds, default=list(range(20)))
    sp.add_argument("--c", type=float, default=0.03)
    sp.add_argument("--loss", choices=("hinge", "squared"), default="hinge")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--max-iter", type=int, default=5000)
    sp.add_argument("--history", type=int, default=10)
    sp.add_argument("--out")

    sp = add("eval", cmd_eval, "accuracy, AUC and partial AUC of a score file")
    sp.add_argument("--scores", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--fpr-max", type=float, default=0.1)
    sp.add_argument("--out")
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    command, config = _config_location(argv)
    subparsers = parser._subparsers._group_actions[0].choices
    if config and command in subparsers:
        _apply_config(subparsers[command], read_config(config))
    args = parser.parse_args(argv)
    # p tokens are kept raw so that '1' can be told apart from a real 1.0
    if hasattr(args, "p_raw"):
        try:
            args.p = (_csv(parse_p)(args.p_raw) if args.command == "sweep"
                      else parse_p(args.p_raw))
        except argparse.ArgumentTypeError as exc:
            raise CliError(str(exc), EXIT_USAGE) from None
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(format="blockmkl: %(levelname)s: %(message)s", level=logging.WARNING)
    try:
        if not argv:
            build_parser().print_usage(sys.stderr)
            return EXIT_USAGE
        try:
            args = parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        if args.verbose:
            log.setLevel(logging.INFO)
        return args.func(args, Run(args.command, args))
    except CliError as exc:
        print(f"blockmkl: error: {exc}", file=sys.stderr)
        return exc.code
    except (SolverError, WeightRecoveryError) as exc:
        print(f"blockmkl: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"blockmkl: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"blockmkl: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
