from pathlib import Path
import json
from typing import Dict, List, Optional, Tuple
from tqdm.auto import tqdm
from colorama import Fore, Style
import pandas as pd
from src.errors import FormatError
from src.models.checkpoint import CheckpointMeta, TensorEntry
from src.tensor import cvt_format
from src.tensor.ctensor import CTensor

METRICS_COLUMNS = ["epoch", "train_loss", "eval_loss", "accuracy"]


class FileHandler:
    METRICS_FILE = "metrics.csv"
    CHECKPOINT_DIR = "checkpoint"
    META_FILE = "meta.json"

    @staticmethod
    def tensor_filename(name: str) -> str:
        """File name of one state-dict entry inside a checkpoint."""
        return f"{name}.cvt"

    @classmethod
    def save_metrics(cls, rows: List[Dict], run_dir: Path) -> Path:
        """Write the metrics table; reruns with the same rows give the same bytes."""
        run_dir.mkdir(parents=True, exist_ok=True)
        path = run_dir / cls.METRICS_FILE
        frame = pd.DataFrame(rows, columns=METRICS_COLUMNS)
        frame["epoch"] = frame["epoch"].astype(int)
        for column in METRICS_COLUMNS[1:]:
            frame[column] = pd.to_numeric(frame[column]).astype(float)
        frame.to_csv(path, index=False, na_rep="", float_format="%.17g", lineterminator="\n")
        return path

    @classmethod
    def load_metrics(cls, path: Path) -> pd.DataFrame:
        if path.is_dir():
            path = path / cls.METRICS_FILE
        frame = pd.read_csv(path)
        if list(frame.columns) != METRICS_COLUMNS:
            raise FormatError(f"{path}: expected columns {METRICS_COLUMNS}, got {list(frame.columns)}")
        return frame

    @classmethod
    def save_checkpoint(
        cls, state: Dict[str, CTensor], meta: CheckpointMeta, run_dir: Path
    ) -> Path:
        """Save every tensor as a .cvt file next to meta.json"""
        ckpt_dir = run_dir / cls.CHECKPOINT_DIR
        ckpt_dir.mkdir(parents=True, exist_ok=True)

        pbar = tqdm(
            state.items(),
            desc=f"{Fore.GREEN}💾 Saving Checkpoint{Style.RESET_ALL}",
            bar_format="{desc}: {percentage:3.0f}%|{bar}| {n_fmt}/{total_fmt}",
            colour="green",
            leave=False,
        )
        entries = []
        for name, tensor in pbar:
            filename = cls.tensor_filename(name)
            cvt_format.save(ckpt_dir / filename, tensor)
            entries.append(
                TensorEntry(name=name, file=filename, shape=list(tensor.shape), dtype=tensor.dtype)
            )
        pbar.close()

        meta = meta.model_copy(update={"tensors": entries})
        with open(ckpt_dir / cls.META_FILE, "w", encoding="utf-8") as f:
            f.write(meta.model_dump_json(indent=2))
        return ckpt_dir

    @classmethod
    def load_meta(cls, ckpt_dir: Path) -> CheckpointMeta:
        meta_path = ckpt_dir / cls.META_FILE
        if not meta_path.exists():
            raise FormatError(f"{ckpt_dir} is not a checkpoint: {cls.META_FILE} missing")
        with open(meta_path, "r", encoding="utf-8") as f:
            return CheckpointMeta.model_validate(json.load(f))

    @classmethod
    def load_checkpoint(cls, ckpt_dir: Path) -> Tuple[Dict[str, CTensor], CheckpointMeta]:
        """Read the tensors listed in meta.json; shapes and dtypes are checked."""
        ckpt_dir = cls.resolve_checkpoint(ckpt_dir)
        meta = cls.load_meta(ckpt_dir)
        state: Dict[str, CTensor] = {}
        for entry in meta.tensors:
            tensor = cvt_format.load(ckpt_dir / entry.file)
            if list(tensor.shape) != entry.shape or tensor.dtype != entry.dtype:
                raise FormatError(
                    f"{entry.file}: stored {tensor.dtype}{list(tensor.shape)} does not match "
                    f"meta.json {entry.dtype}{entry.shape}"
                )
            state[entry.name] = tensor
        return state, meta

    @classmethod
    def resolve_checkpoint(cls, path: Path) -> Path:
        """Accept either the checkpoint directory or the run directory holding it."""
        path = Path(path)
        if (path / cls.META_FILE).exists():
            return path
        nested = path / cls.CHECKPOINT_DIR
        if (nested / cls.META_FILE).exists():
            return nested
        raise FormatError(f"No checkpoint found at {path}")

    @classmethod
    def latest_run(cls, runs_dir: Path) -> Optional[Path]:
        """Most recently written run directory that holds a checkpoint"""
        if not runs_dir.exists():
            return None
        runs = [p for p in runs_dir.iterdir() if (p / cls.CHECKPOINT_DIR / cls.META_FILE).exists()]
        if not runs:
            return None
        return max(runs, key=lambda p: (p / cls.CHECKPOINT_DIR / cls.META_FILE).stat().st_mtime)
