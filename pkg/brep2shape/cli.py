"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 19, 2026

Command line surface. Every invocation writes one run report.

"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
from atom.api import Atom, Bool, Dict, Float, Int, List, Str

from .core.errors import (
    ArgumentError,
    Brep2ShapeError,
    IntegrityError,
    NumericError,
    ParseError,
)
from .impl.files import atomic_write, digest
from .impl.lxml_model import write_report

log = logging.getLogger("brep2shape")

DEFAULT_REPORT = "brep2shape-report.xml"

#: File suffixes of the pipeline outputs
SUFFIXES = {
    "model": ".xml",
    "primitives": ".prims.xml",
    "targets": ".b2s",
    "tokens": ".b2t",
    "checkpoint": ".b2c",
}


class RunReport(Atom):
    """Provenance and outcome of one command.

    The wall time is the only field that changes between identical runs,
    it is left out when `timed` is False.

    """

    command = Str()

    #: Input path to sha256
    inputs = Dict()

    #: Every option, defaults included
    config = Dict()

    metrics = Dict()

    #: (error class, message)
    errors = List()

    wall_time = Float()

    #: Write the wall time
    timed = Bool(True)

    exit_code = Int()

    def add_input(self, path: Path):
        if path.is_dir():
            for p in sorted(path.iterdir()):
                if p.is_file():
                    self.inputs[str(p)] = digest(p)
        elif path.exists():
            self.inputs[str(path)] = digest(path)


class ArgumentParser(argparse.ArgumentParser):
    """Raises an `ArgumentError` instead of exiting so a report is still written."""

    def error(self, message: str):
        raise ArgumentError(message)


def _caps(values: Sequence[int]) -> tuple[int, int]:
    if len(values) != 2 or min(values) < 1:
        raise ArgumentError(f"--caps needs two positive integers, got {values}")
    return int(values[0]), int(values[1])


def _params(items: Sequence[str]) -> dict[str, float]:
    params = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise ArgumentError(f"Parameter '{item}' is not of the form name=value")
        try:
            params[key] = float(value)
        except ValueError as e:
            raise ArgumentError(f"Parameter '{key}' is not a number: {value}") from e
    return params


# -----------------------------------------------------------------------------
# Geometry commands
# -----------------------------------------------------------------------------
def cmd_gen(args, report: RunReport):
    from .components.solids import SOLID_KINDS, generate_dataset, generate_solid
    from .impl.lxml_model import write_model

    kinds = args.kind.split(",")
    for kind in kinds:
        if kind not in SOLID_KINDS:
            raise ArgumentError(
                f"Unknown solid kind '{kind}', expected one of {SOLID_KINDS}"
            )
    out = Path(args.out)
    if args.count is None:
        if len(kinds) != 1:
            raise ArgumentError("Several kinds need --count")
        model = generate_solid(kinds[0], _params(args.param), seed=args.seed)
        write_model(model, out)
        paths = [out]
    else:
        if args.param:
            raise ArgumentError("--param cannot be combined with --count")
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for i, model in enumerate(generate_dataset(kinds, args.count, args.seed or 0)):
            path = out / f"{model.name or 'solid'}-{i:04d}{SUFFIXES['model']}"
            write_model(model, path)
            paths.append(path)
    report.metrics["models"] = len(paths)
    print(f"Wrote {len(paths)} model(s) to {out}")


def cmd_decompose(args, report: RunReport):
    from .components.primitives import DecomposeSettings, decompose_model, max_residual
    from .impl.lxml_model import read_model, write_primitives

    settings = DecomposeSettings(
        tau=args.tau, max_depth=args.max_depth, workers=args.workers
    ).validate()
    model = read_model(args.input)
    decomposed = decompose_model(model, settings)
    residual = max_residual(model, decomposed)
    write_primitives(decomposed, args.out)
    report.metrics.update(
        faces=model.n_faces,
        edges=model.n_edges,
        triangles=decomposed.n_triangles,
        segments=decomposed.n_segments,
        unconverged=decomposed.unconverged,
        max_residual=residual,
    )
    print(
        f"{decomposed.n_triangles} triangle(s), {decomposed.n_segments} segment(s), "
        f"{decomposed.unconverged} unconverged cell(s), max residual {residual:.3g}"
    )


def cmd_sample(args, report: RunReport):
    from .components.sampling import sample_entity_points
    from .impl.binary import write_targets
    from .impl.lxml_model import read_model, read_primitives

    if args.m < 1:
        raise ArgumentError(f"-m must be positive, got {args.m}")
    model = read_model(args.input)
    decomposed = read_primitives(args.primitives)
    targets = sample_entity_points(model, decomposed, args.m, _caps(args.caps))
    write_targets(targets, args.out)
    valid = int(targets.face_mask.sum() + targets.edge_mask.sum())
    report.metrics.update(points=valid, faces=targets.n_faces, edges=targets.n_edges)
    print(f"Sampled {valid} point(s)")


def cmd_tokenize(args, report: RunReport):
    from .components.tokenize import tokenize_model
    from .impl.binary import write_batch
    from .impl.lxml_model import read_model, read_primitives

    model = read_model(args.input)
    batch = tokenize_model(model, read_primitives(args.primitives), _caps(args.caps))
    write_batch(batch, args.out)
    report.metrics.update(
        faces=batch.n_faces,
        edges=batch.n_edges,
        face_adjacency=len(batch.face_adjacency),
        edge_adjacency=len(batch.edge_adjacency),
    )
    print(f"Tokenized {batch.n_faces} face(s) and {batch.n_edges} edge(s)")


def cmd_verify_convergence(args, report: RunReport):
    from .components.boundary import convergence_study, reference_curve

    curve = reference_curve(args.curve)
    hs, errors, slope = convergence_study(curve, levels=args.levels)
    report.metrics.update(slope=slope, h=hs.tolist(), rmse=errors.tolist())
    print(f"slope {slope:.4f}")


# -----------------------------------------------------------------------------
# Learning commands
# -----------------------------------------------------------------------------
def _pairs(data_dir: Path) -> list[tuple[str, Path, Path]]:
    """(stem, tokens, targets) for every tokens file with a targets sibling."""
    if not data_dir.is_dir():
        raise ArgumentError(f"{data_dir} is not a directory")
    pairs = []
    for tokens in sorted(data_dir.glob(f"*{SUFFIXES['tokens']}")):
        stem = tokens.name[: -len(SUFFIXES["tokens"])]
        targets = data_dir / f"{stem}{SUFFIXES['targets']}"
        if not targets.exists():
            raise IntegrityError(f"{tokens} has no targets file {targets.name}")
        pairs.append((stem, tokens, targets))
    if not pairs:
        raise ArgumentError(f"No {SUFFIXES['tokens']} files in {data_dir}")
    return pairs


def cmd_pretrain(args, report: RunReport):
    from .impl.binary import read_batch, read_targets
    from .impl.lxml_model import read_config
    from .net.config import ModelConfig, OptimizerSettings
    from .net.train import CONFIG_TAG, train, write_trace

    pairs = _pairs(Path(args.data_dir))
    dataset = [(read_batch(t), read_targets(s)) for _, t, s in pairs]
    first = dataset[0][1]
    if args.config:
        config = read_config(ModelConfig, args.config, CONFIG_TAG)
    else:
        config = ModelConfig(
            points_per_primitive=first.m,
            face_cap=first.face_cap,
            edge_cap=first.edge_cap,
        )
    for batch, targets in dataset:
        if (targets.m, targets.face_cap, targets.edge_cap) != (
            config.points_per_primitive,
            config.face_cap,
            config.edge_cap,
        ):
            raise IntegrityError(
                "Targets were sampled with caps or m that differ from the configuration"
            )
        degrees = (config.triangle_degree, config.curve_degree)
        if (batch.triangle_degree, batch.curve_degree) != degrees:
            raise IntegrityError("Token degrees differ from the configuration")
    config.validate()
    settings = OptimizerSettings(
        lr=args.lr,
        weight_decay=args.weight_decay,
        batch_size=args.batch_size,
        shuffle=args.shuffle,
    )
    echoed = ("width", "dual_layers", "attention_mode", "streams", "edge_supervision")
    for member in echoed:
        report.config[f"model.{member}"] = getattr(config, member)

    result = train(
        dataset, config, settings, steps=args.steps, seed=args.seed, checkpoint=args.out
    )
    trace = args.trace or str(Path(args.out).with_suffix(".csv"))
    write_trace(result.trace, trace)
    report.metrics.update(
        models=len(dataset),
        initial_loss=result.initial_loss,
        final_loss=result.final_loss,
        ratio=result.final_loss / result.initial_loss if result.initial_loss else 0.0,
    )
    print(
        f"Loss {result.initial_loss:.6g} -> {result.final_loss:.6g}, trace in {trace}"
    )


def read_labels(path: Path) -> dict[str, np.ndarray]:
    """Rows of `stem,label[,label...]`: one label per model or per face."""
    labels = {}
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"Cannot read labels: {e}", str(path)) from e
    for n, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if not row or row[0].startswith("#"):
            continue
        try:
            labels[row[0]] = np.array([int(v) for v in row[1:]], dtype=np.int64)
        except ValueError as e:
            raise ParseError(f"Invalid label on row {n}", f"{path}:{n}") from e
    return labels


def cmd_finetune(args, report: RunReport):
    from .impl.binary import read_batch
    from .net.config import FinetuneSettings
    from .net.finetune import finetune_head, predict
    from .net.train import load_checkpoint

    backbone, _ = load_checkpoint(args.checkpoint)
    labels = read_labels(Path(args.labels))
    data_dir = Path(args.data_dir)
    suffix = SUFFIXES["tokens"]
    stems = sorted(p.name[: -len(suffix)] for p in data_dir.glob(f"*{suffix}"))
    missing = [s for s in stems if s not in labels]
    if not stems or missing:
        raise IntegrityError(f"Models without labels: {missing or 'no token files'}")
    dataset = [(read_batch(data_dir / f"{s}{suffix}"), labels[s]) for s in stems]
    settings = FinetuneSettings(
        strategy=args.strategy,
        steps=args.steps,
        lr=args.lr,
        batch_size=args.batch_size,
        shuffle=args.shuffle,
    )
    result = finetune_head(backbone, args.task, dataset, settings, seed=args.seed)
    if args.out:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        for stem, (batch, _) in zip(stems, dataset):
            writer.writerow([stem, *predict(result.model, batch).tolist()])
        atomic_write(args.out, out.getvalue().encode("utf-8"))
    report.metrics.update(
        accuracy=result.accuracy,
        mean_iou=result.mean_iou,
        final_loss=result.trace[-1][1],
    )
    print(f"accuracy {result.accuracy:.3f}, mean IoU {result.mean_iou:.3f}")


def cmd_gradcheck(args, report: RunReport):
    from .net.train import gradcheck

    result = gradcheck(seed=args.seed, samples=args.samples)
    n = len(result.errors)
    report.metrics.update(entries=n, max_relative_error=result.max_error)
    print(f"max relative error {result.max_error:.3g} over {n} parameter(s)")
    if not result.passed:
        raise NumericError(
            f"Gradient check failed: {result.max_error:.3g} >= {result.tolerance:g}"
        )


# -----------------------------------------------------------------------------
# Commands
# -----------------------------------------------------------------------------
def gen_factory():
    return cmd_gen


def decompose_factory():
    return cmd_decompose


def sample_factory():
    return cmd_sample


def tokenize_factory():
    return cmd_tokenize


def pretrain_factory():
    return cmd_pretrain


def finetune_factory():
    return cmd_finetune


def verify_convergence_factory():
    return cmd_verify_convergence


def gradcheck_factory():
    return cmd_gradcheck


#: Command name to a factory of its implementation
COMMANDS: dict[str, Callable[[], Callable[[Any, RunReport], None]]] = {
    "gen": gen_factory,
    "decompose": decompose_factory,
    "sample": sample_factory,
    "tokenize": tokenize_factory,
    "pretrain": pretrain_factory,
    "finetune": finetune_factory,
    "verify-convergence": verify_convergence_factory,
    "gradcheck": gradcheck_factory,
}


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--report", default=DEFAULT_REPORT, help="Run report path")
    common.add_argument(
        "--no-timing",
        action="store_true",
        help="Leave the wall time out of the report so reruns are byte identical",
    )
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    parser = ArgumentParser(
        prog="brep2shape", description="B-rep to shape pre-training pipeline"
    )
    sub = parser.add_subparsers(
        dest="command", required=True, parser_class=ArgumentParser
    )

    p = sub.add_parser("gen", parents=[common], help="Generate synthetic solids")
    p.add_argument("kind", help="Solid kind, or a comma separated list with --count")
    p.add_argument("--param", action="append", default=[], help="name=value dimension")
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--count", type=int, help="Write this many models into the output directory"
    )
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser(
        "decompose", parents=[common], help="Decompose a model into Bezier primitives"
    )
    p.add_argument("input")
    p.add_argument("--tau", type=float, default=0.995)
    p.add_argument("--max-depth", type=int, default=8)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("sample", parents=[common], help="Sample target points")
    p.add_argument("input")
    p.add_argument("primitives")
    p.add_argument("-m", type=int, default=3)
    p.add_argument("--caps", type=int, nargs=2, default=[32, 8])
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("tokenize", parents=[common], help="Build primitive tensors")
    p.add_argument("input")
    p.add_argument("primitives")
    p.add_argument("--caps", type=int, nargs=2, default=[32, 8])
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser(
        "pretrain",
        parents=[common],
        help="Pre-train on a directory of tokens and targets",
    )
    p.add_argument("data_dir")
    p.add_argument("--config", help="<model-config> document")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--weight-decay", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--shuffle", action="store_true")
    p.add_argument("--trace", help="Loss trace CSV, defaults next to the checkpoint")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser(
        "finetune", parents=[common], help="Train a task head on a checkpoint"
    )
    p.add_argument("checkpoint")
    p.add_argument("task", choices=["classify", "segment"])
    p.add_argument("labels", help="CSV rows of stem,label[,label...]")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--strategy", choices=["full", "partial", "linear"], default="full")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--shuffle", action="store_true")
    p.add_argument("-o", "--out", help="Predictions CSV")

    p = sub.add_parser(
        "verify-convergence", parents=[common], help="Boundary error convergence slope"
    )
    p.add_argument("--curve", choices=["circle", "ellipse"], default="circle")
    p.add_argument("--levels", type=int, default=6)

    p = sub.add_parser(
        "gradcheck", parents=[common], help="Finite difference gradient check"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=50)
    return parser


def _report_path(argv: Sequence[str]) -> str:
    """The --report value of an argument list that failed to parse."""
    for i, arg in enumerate(argv):
        if arg == "--report" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--report="):
            return arg.split("=", 1)[1]
    return DEFAULT_REPORT


def setup_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", force=True
    )


INPUT_ARGS = ("input", "primitives", "data_dir", "config", "checkpoint", "labels")


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    report = RunReport(command=argv[0] if argv else "")
    report_path = _report_path(argv)
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        report_path = args.report
        setup_logging(args.verbose, args.quiet)
        report.command = args.command
        report.timed = not args.no_timing
        hidden = ("command", "report", "no_timing", "verbose", "quiet")
        report.config = {k: v for k, v in vars(args).items() if k not in hidden}
        for name in INPUT_ARGS:
            value = getattr(args, name, None)
            if value:
                report.add_input(Path(value))
        COMMANDS[args.command]()(args, report)
    except Brep2ShapeError as e:
        report.errors.append((type(e).__name__, str(e)))
        report.exit_code = e.exit_code
        log.error("%s: %s", type(e).__name__, e)
    except OSError as e:
        report.errors.append((type(e).__name__, str(e)))
        report.exit_code = ArgumentError.exit_code
        log.error("%s", e)
    report.wall_time = time.perf_counter() - start
    write_report(report, report_path)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
