from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple
import hashlib
import json
import math

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, field_validator

from src.errors import ConfigError

JsonPath = Tuple[Any, ...]


class LayerConfig(BaseModel):
    """One model layer: a vocabulary name plus that layer's keys."""

    model_config = ConfigDict(extra="allow")

    name: str

    @property
    def options(self) -> Dict[str, Any]:
        return dict(self.model_extra or {})


class DatasetSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # classify_tones
    n_classes: int = Field(default=4, ge=2)
    samples_per_class: int = Field(default=128, gt=0)
    test_samples_per_class: int = Field(default=64, gt=0)
    snr_db: Optional[float] = 10.0  # None or inf switches the noise off
    # denoise
    n_train: int = Field(default=256, gt=0)
    n_test: int = Field(default=64, gt=0)
    n_tones: int = Field(default=3, gt=0)
    noise_sigma: float = Field(default=0.1, ge=0)
    # shared
    length: int = Field(default=128, gt=0)

    @field_validator("snr_db")
    @classmethod
    def check_snr(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and math.isnan(v):
            raise ValueError("snr_db must be a number")
        return v


class TrainConfig(BaseModel):
    """JSON run description; see docs/train_config.md."""

    model_config = ConfigDict(extra="forbid")

    model: List[LayerConfig]
    task: Literal["classify_tones", "denoise"]
    epochs: int = Field(ge=0)
    batch_size: int = Field(gt=0)
    lr: float = Field(gt=0)
    optimizer: Literal["sgd", "adam"] = "adam"
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = Field(default=1e-8, gt=0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    dtype: Literal["f32", "f64"] = "f64"
    loss: str = "SplitMSE"
    loss_params: Dict[str, float] = Field(default_factory=dict)
    kernel_path: Optional[Literal["gauss", "naive"]] = None
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    output_dir: Optional[str] = None

    _source: Optional[Path] = PrivateAttr(default=None)
    _lines: Dict[JsonPath, int] = PrivateAttr(default_factory=dict)

    @field_validator("model")
    @classmethod
    def check_model(cls, v: List[LayerConfig]) -> List[LayerConfig]:
        if not v:
            raise ValueError("model needs at least one layer")
        return v

    def line_of(self, path: JsonPath) -> Optional[int]:
        """Line of the deepest known key along ``path`` in the source file."""
        return _line_of(self._lines, path)

    def where(self, path: JsonPath) -> str:
        line = self.line_of(path)
        location = ".".join(str(p) for p in path)
        if self._source is None or line is None:
            return location
        return f"{self._source}:{line} ({location})"

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _line_of(lines: Dict[JsonPath, int], path: JsonPath) -> Optional[int]:
    path = tuple(path)
    while path:
        if path in lines:
            return lines[path]
        path = path[:-1]
    return None


def key_lines(text: str) -> Dict[JsonPath, int]:
    """Map every key path of a valid JSON document to its 1-based line."""
    decoder = json.JSONDecoder()
    lines: Dict[JsonPath, int] = {}

    def line_at(i: int) -> int:
        return text.count("\n", 0, i) + 1

    def skip(i: int) -> int:
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    def value(i: int, path: JsonPath) -> int:
        i = skip(i)
        if text[i] == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, end = json.decoder.scanstring(text, skip(i) + 1)
                lines[path + (key,)] = line_at(end)
                i = skip(end) + 1  # colon
                i = skip(value(i, path + (key,)))
                if text[i] == ",":
                    i += 1
                    continue
                return i + 1
        if text[i] == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            index = 0
            while True:
                i = skip(i)
                lines[path + (index,)] = line_at(i)
                i = skip(value(i, path + (index,)))
                if text[i] == ",":
                    i += 1
                    index += 1
                    continue
                return i + 1
        _, end = decoder.raw_decode(text, i)
        return end

    value(0, ())
    return lines


def load_train_config(path: Path) -> TrainConfig:
    """Parse and validate a TrainConfig file; errors name the file line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from e
    lines = key_lines(text)
    try:
        cfg = TrainConfig.model_validate(data)
    except ValidationError as e:
        messages = []
        for err in e.errors():
            loc = tuple(err["loc"])
            line = _line_of(lines, loc)
            where = f"{path}:{line}" if line is not None else str(path)
            key = ".".join(str(p) for p in loc) or "<root>"
            messages.append(f"{where}: {key}: {err['msg']}")
        raise ConfigError("\n".join(messages)) from e
    cfg._source = path
    cfg._lines = lines
    return cfg
