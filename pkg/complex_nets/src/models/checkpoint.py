from datetime import datetime
from typing import Any, Dict, List, Optional
from pydantic import BaseModel, Field


class TensorEntry(BaseModel):
    name: str
    file: str
    shape: List[int]
    dtype: str


class CheckpointMeta(BaseModel):
    """meta.json of a checkpoint directory."""

    config_hash: str
    epoch: int
    dtype: str
    rng_state: Dict[str, Any] = Field(default_factory=dict)
    tensors: List[TensorEntry] = Field(default_factory=list)
    metrics: Dict[str, Optional[float]] = Field(default_factory=dict)
    saved_at: datetime = Field(default_factory=datetime.now)
