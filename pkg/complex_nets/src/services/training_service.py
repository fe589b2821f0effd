from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple
import numpy as np
from tqdm.auto import tqdm
from colorama import Fore, Style
from src import config
from src.autodiff import functional as F
from src.autodiff.variable import Variable, backward, no_grad
from src.errors import ConfigError
from src.models.checkpoint import CheckpointMeta
from src.models.train_config import TrainConfig
from src.nn.losses import get_loss
from src.nn.optim import build_optimizer
from src.nn.registry import build_model, chain_check
from src.services.dataset_service import DatasetService, SignalDataset
from src.tensor.ctensor import CTensor
from src.utils.file_handler import FileHandler


@dataclass
class EvalResult:
    loss: float
    accuracy: Optional[float]
    predictions: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None


def one_hot(labels: np.ndarray, n_classes: int, dtype: str) -> CTensor:
    """Complex one-hot targets (1 + 0j on the true class)."""
    re = np.zeros((labels.size, n_classes))
    re[np.arange(labels.size), labels] = 1.0
    return CTensor(re, dtype=dtype)


def predict(output: Variable) -> np.ndarray:
    """Class with the largest output magnitude."""
    return np.argmax(np.abs(output.numpy()), axis=-1)


class TrainingService:
    """Builds data, model, loss and optimizer from a TrainConfig and runs the epochs."""

    def __init__(self, cfg: TrainConfig, run_dir: Optional[Path] = None) -> None:
        self.cfg = cfg
        self.dtype = cfg.dtype
        self.run_dir = Path(run_dir) if run_dir is not None else self._default_run_dir()
        self.rng = np.random.default_rng(cfg.seed)

        datasets = DatasetService(cfg.dataset, cfg.task, cfg.seed)
        self.train_set = self._cast(datasets.generate("train"))
        self.test_set = self._cast(datasets.generate("test"))

        self.model = build_model(cfg, self.rng, self.dtype)
        self._check_output_shape()
        self.loss_fn = get_loss(cfg.loss, **cfg.loss_params)
        opt_kwargs = {"betas": cfg.betas, "eps": cfg.eps} if cfg.optimizer == "adam" else {}
        self.optimizer = build_optimizer(cfg.optimizer, self.model.parameters(), cfg.lr, **opt_kwargs)
        self.history: List[Dict] = []

    def _default_run_dir(self) -> Path:
        if self.cfg.output_dir is not None:
            return Path(self.cfg.output_dir)
        stem = self.cfg._source.stem if self.cfg._source is not None else "run"
        return config.RUNS_DIR / f"{stem}-{self.cfg.config_hash()}"

    def _cast(self, dataset: SignalDataset) -> SignalDataset:
        if self.dtype == "f64":
            return dataset
        targets = dataset.targets
        if isinstance(targets, CTensor):
            targets = targets.astype(self.dtype)
        return SignalDataset(dataset.inputs.astype(self.dtype), targets, dataset.task)

    def _check_output_shape(self) -> None:
        sample = self.train_set.inputs[: min(2, len(self.train_set))]
        out_shape = chain_check(self.model, self.cfg, sample)
        if self.cfg.task == "classify_tones":
            expected = (sample.shape[0], self.cfg.dataset.n_classes)
        else:
            expected = tuple(sample.shape)
        if out_shape != expected:
            raise ConfigError(
                f"{self.cfg.where(('model',))}: model output {out_shape} does not match "
                f"the {self.cfg.task} target shape {expected}"
            )

    def _targets(self, dataset: SignalDataset, index: np.ndarray) -> CTensor:
        if dataset.task == "classify_tones":
            return one_hot(dataset.targets[index], self.cfg.dataset.n_classes, self.dtype)
        return dataset.targets[index]

    def _batches(self, dataset: SignalDataset, shuffle: bool) -> Iterator[np.ndarray]:
        order = self.rng.permutation(len(dataset)) if shuffle else np.arange(len(dataset))
        for start in range(0, len(dataset), self.cfg.batch_size):
            yield order[start:start + self.cfg.batch_size]

    def train_epoch(self) -> float:
        """One pass over the shuffled train set; returns the sample-weighted mean loss."""
        self.model.train()
        total, seen = 0.0, 0
        for index in self._batches(self.train_set, shuffle=True):
            self.optimizer.zero_grad()
            output = self.model(Variable(self.train_set.inputs[index]))
            loss = self.loss_fn(output, self._targets(self.train_set, index))
            backward(loss)
            self.optimizer.step()
            total += loss.item().real * index.size
            seen += index.size
        return total / seen

    def evaluate(self, split: str = "test") -> EvalResult:
        dataset = self.test_set if split == "test" else self.train_set
        self.model.eval()
        total, predictions = 0.0, []
        with no_grad():
            for index in self._batches(dataset, shuffle=False):
                output = self.model(Variable(dataset.inputs[index]))
                loss = self.loss_fn(output, self._targets(dataset, index))
                total += loss.item().real * index.size
                if dataset.task == "classify_tones":
                    predictions.append(predict(output))
        result = EvalResult(loss=total / len(dataset), accuracy=None)
        if dataset.task == "classify_tones":
            result.predictions = np.concatenate(predictions)
            result.labels = dataset.labels
            result.accuracy = float(np.mean(result.predictions == result.labels))
        return result

    def _record(self, epoch: int, train_loss: float, evaluation: EvalResult) -> Dict:
        row = {
            "epoch": epoch,
            "train_loss": train_loss,
            "eval_loss": evaluation.loss,
            "accuracy": evaluation.accuracy,
        }
        self.history.append(row)
        FileHandler.save_metrics(self.history, self.run_dir)
        return row

    def run(self) -> List[Dict]:
        """Epoch 0 holds the metrics of the untrained model; one row per epoch after it."""
        self._record(0, self.evaluate("train").loss, self.evaluate("test"))

        pbar = tqdm(
            range(1, self.cfg.epochs + 1),
            desc=f"{Fore.CYAN}🧠 Training{Style.RESET_ALL}",
            bar_format="{desc}: {percentage:3.0f}%|{bar}| "
            "{n_fmt}/{total_fmt} [{elapsed}<{remaining}] {postfix}",
            colour="cyan",
            leave=False,
        )
        for epoch in pbar:
            train_loss = self.train_epoch()
            row = self._record(epoch, train_loss, self.evaluate("test"))
            postfix = {"loss": f"{train_loss:.4g}", "eval": f"{row['eval_loss']:.4g}"}
            if row["accuracy"] is not None:
                postfix["acc"] = f"{row['accuracy']:.3f}"
            pbar.set_postfix(postfix)
        pbar.close()

        self.save_checkpoint(self.cfg.epochs)
        return self.history

    def checkpoint_meta(self, epoch: int) -> CheckpointMeta:
        last = self.history[-1] if self.history else {}
        return CheckpointMeta(
            config_hash=self.cfg.config_hash(),
            epoch=epoch,
            dtype=self.dtype,
            rng_state=self.rng.bit_generator.state,
            metrics={k: v for k, v in last.items() if k != "epoch"},
        )

    def save_checkpoint(self, epoch: int) -> Path:
        return FileHandler.save_checkpoint(self.model.state_dict(), self.checkpoint_meta(epoch), self.run_dir)

    def load_checkpoint(self, path: Path) -> CheckpointMeta:
        """Restore weights, buffers and the generator state saved by ``save_checkpoint``."""
        state, meta = FileHandler.load_checkpoint(path)
        if meta.dtype != self.dtype:
            raise ConfigError(f"checkpoint dtype {meta.dtype} differs from config dtype {self.dtype}")
        self.model.load_state_dict(state)
        if meta.rng_state:
            self.rng.bit_generator.state = meta.rng_state
        return meta


def train(cfg: TrainConfig, run_dir: Optional[Path] = None) -> Tuple[TrainingService, List[Dict]]:
    service = TrainingService(cfg, run_dir)
    return service, service.run()
