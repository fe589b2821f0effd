from pathlib import Path
from typing import List, Optional
import argparse
import sys

import pandas as pd
from colorama import Fore, Style
from sklearn.metrics import accuracy_score, confusion_matrix

from src.errors import CVNNError, NumericCheckError
from src.models.train_config import load_train_config
from src.services.benchmark_service import bench_gauss
from src.services.gradcheck_service import SUITE, GradcheckService
from src.services.training_service import TrainingService
from src.utils import console
from src.utils.file_handler import FileHandler

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2


class CLIParser(argparse.ArgumentParser):
    """Usage errors exit with 1 like every other validation failure."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = CLIParser(prog="complex_nets", description="Complex-valued neural networks")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CLIParser)

    train = commands.add_parser("train", help="train a model from a JSON config")
    train.add_argument("--config", required=True, type=Path)
    train.add_argument("--output", type=Path, help="run directory (defaults to the config's output_dir)")

    evaluate = commands.add_parser("eval", help="evaluate a checkpoint on the test split")
    evaluate.add_argument("--config", required=True, type=Path)
    evaluate.add_argument("--checkpoint", required=True, type=Path)

    gradcheck = commands.add_parser("gradcheck", help="finite-difference gradient suite")
    gradcheck.add_argument("--module", action="append", choices=list(SUITE), dest="modules")
    gradcheck.add_argument("--points", type=int, default=None)
    gradcheck.add_argument("--tol", type=float, default=None)

    bench = commands.add_parser("bench-gauss", help="naive vs Gauss complex matmul")
    bench.add_argument("--size", type=int, default=256)
    bench.add_argument("--reps", type=int, default=5)
    return parser


def run_train(args: argparse.Namespace) -> int:
    cfg = load_train_config(args.config)
    print("\n🧠 Complex Nets Training Started")
    console.rule()
    console.info(
        f"📄 Config: {console.highlight(args.config)} ({cfg.task}, {cfg.epochs} epochs, "
        f"{cfg.optimizer}, lr={cfg.lr}, seed={cfg.seed}, {cfg.dtype})"
    )
    service = TrainingService(cfg, args.output)
    console.info(f"📊 {len(service.train_set):,} train / {len(service.test_set):,} test samples")
    console.info(f"🔢 {sum(p.value.size for p in service.model.parameters()):,} complex parameters")
    console.rule()

    history = service.run()
    last = history[-1]
    console.rule()
    console.success(f"Metrics and checkpoint saved to {service.run_dir}")
    line = f"Final: train_loss={last['train_loss']:.6g} eval_loss={last['eval_loss']:.6g}"
    if last["accuracy"] is not None:
        line += f" accuracy={last['accuracy']:.4f}"
    print(line)
    return EXIT_OK


def run_eval(args: argparse.Namespace) -> int:
    cfg = load_train_config(args.config)
    service = TrainingService(cfg, run_dir=FileHandler.resolve_checkpoint(args.checkpoint).parent)
    meta = service.load_checkpoint(args.checkpoint)
    if meta.config_hash != cfg.config_hash():
        console.warn(f"checkpoint was trained with config {meta.config_hash}, not {cfg.config_hash()}")

    result = service.evaluate("test")
    print(f"\n📈 Evaluation of epoch {meta.epoch}")
    console.rule()
    print(f"eval_loss: {Fore.CYAN}{result.loss:.6g}{Style.RESET_ALL}")
    if result.accuracy is not None:
        accuracy = accuracy_score(result.labels, result.predictions)
        print(f"accuracy:  {Fore.CYAN}{accuracy:.4f}{Style.RESET_ALL}")
        classes = list(range(cfg.dataset.n_classes))
        matrix = confusion_matrix(result.labels, result.predictions, labels=classes)
        print("\nConfusion matrix (rows: true class, columns: predicted)")
        print(pd.DataFrame(matrix, index=classes, columns=classes).to_string())
    return EXIT_OK


def run_gradcheck(args: argparse.Namespace) -> int:
    service = GradcheckService(args.modules, args.tol, args.points)
    print(f"\n🔬 Gradient check: {', '.join(service.modules)}")
    console.rule()
    report = service.run()
    with pd.option_context("display.float_format", "{:.3e}".format):
        print(report.by_module().to_string())
    console.rule()
    if not report.passed:
        for case in report.failed:
            console.error(f"{case.module}.{case.name}: worst relative error {case.worst_error:.3e}")
        print(f"{len(report.failed)} case(s) above tolerance {report.tolerance:g}")
        return EXIT_NUMERIC
    worst = max(r.worst_error for r in report.results)
    console.success(f"{len(report.results)} cases within {report.tolerance:g} (worst {worst:.3e})")
    return EXIT_OK


def run_bench(args: argparse.Namespace) -> int:
    print(f"\n⏱  Gauss benchmark: {args.size}x{args.size} complex matmul, {args.reps} reps")
    console.rule()
    report = bench_gauss(args.size, args.reps)
    print(report.to_frame().to_string())
    console.rule()
    print(
        f"operator applications: naive {report.naive.applications}, gauss {report.gauss.applications}"
    )
    print(f"multiplication ratio (gauss / naive): {Fore.CYAN}{report.mult_ratio:.2f}{Style.RESET_ALL}")
    print(f"wall-time speedup: {report.speedup:.2f}x")
    return EXIT_OK


COMMANDS = {
    "train": run_train,
    "eval": run_eval,
    "gradcheck": run_gradcheck,
    "bench-gauss": run_bench,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NumericCheckError as e:
        console.error(str(e))
        return EXIT_NUMERIC
    except (CVNNError, NotImplementedError) as e:
        console.error(str(e))
        return EXIT_INVALID
    except KeyboardInterrupt:
        console.warn("Interrupted")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
