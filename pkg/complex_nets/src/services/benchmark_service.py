"""Naive (4 applications) against Gauss (3 applications) complex matrix products."""
from dataclasses import asdict, dataclass
from typing import Tuple
import time

import numpy as np
import pandas as pd
from tqdm.auto import tqdm
from colorama import Fore, Style

from src.errors import ConfigError, NumericCheckError
from src.kernels.operators import MatrixOperator, MulCounter, complex_apply
from src.tensor.ctensor import CTensor, circular_normal

AGREEMENT_TOL = 1e-10


@dataclass
class PathTiming:
    path: str
    seconds: float
    applications: int
    multiplications: int


@dataclass
class BenchReport:
    size: int
    reps: int
    naive: PathTiming
    gauss: PathTiming
    max_rel_diff: float

    @property
    def mult_ratio(self) -> float:
        return self.gauss.multiplications / self.naive.multiplications

    @property
    def speedup(self) -> float:
        return self.naive.seconds / self.gauss.seconds if self.gauss.seconds else float("nan")

    @property
    def application_ratio(self) -> float:
        return self.gauss.applications / self.naive.applications

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([asdict(self.naive), asdict(self.gauss)]).set_index("path")
        frame["per_call_s"] = frame["seconds"] / self.reps
        return frame


class BenchmarkService:
    def __init__(self, size: int, reps: int = 5, seed: int = 0) -> None:
        if size <= 0 or reps <= 0:
            raise ConfigError(f"size and reps must be positive, got size={size} reps={reps}")
        self.size = size
        self.reps = reps
        rng = np.random.default_rng(seed)
        weight = circular_normal(rng, (size, size), dtype="f64")
        self.l_re = MatrixOperator(weight.re)
        self.l_im = MatrixOperator(weight.im)
        self.z = circular_normal(rng, (size, size), dtype="f64")

    def _time_path(self, path: str) -> Tuple[PathTiming, CTensor]:
        """Total wall time over the reps; counts are per call."""
        counter = MulCounter()
        result = complex_apply(self.l_re, self.l_im, self.z, path, counter)
        total = 0.0
        for _ in tqdm(
            range(self.reps),
            desc=f"{Fore.MAGENTA}⏱  {path}{Style.RESET_ALL}",
            colour="magenta",
            leave=False,
        ):
            start = time.perf_counter()
            complex_apply(self.l_re, self.l_im, self.z, path)
            total += time.perf_counter() - start
        timing = PathTiming(path, total, counter.applications, counter.multiplications)
        return timing, result

    def run(self) -> BenchReport:
        naive, naive_out = self._time_path("naive")
        gauss, gauss_out = self._time_path("gauss")
        return BenchReport(
            size=self.size,
            reps=self.reps,
            naive=naive,
            gauss=gauss,
            max_rel_diff=relative_difference(naive_out, gauss_out),
        )


def relative_difference(a: CTensor, b: CTensor) -> float:
    scale = max(1.0, float(np.max(np.abs(a.numpy()))))
    return float(np.max(np.abs(a.numpy() - b.numpy()))) / scale


def bench_gauss(size: int, reps: int = 5, seed: int = 0) -> BenchReport:
    """Run both paths; raises NumericCheckError if they disagree or the count ratio is off."""
    report = BenchmarkService(size, reps, seed).run()
    if report.max_rel_diff > AGREEMENT_TOL:
        raise NumericCheckError(
            f"gauss and naive paths differ by {report.max_rel_diff:.3e} (tolerance {AGREEMENT_TOL})"
        )
    if report.mult_ratio != 0.75:
        raise NumericCheckError(f"multiplication ratio {report.mult_ratio} != 0.75")
    return report

