from pathlib import Path
from dotenv import load_dotenv
import os

from src.errors import ConfigError

load_dotenv()

# Default dtype for new tensors and parameters ("f32" or "f64")
DEFAULT_DTYPE = os.getenv("CVNN_DTYPE", "f64")
if DEFAULT_DTYPE not in ("f32", "f64"):
    raise ConfigError(f"CVNN_DTYPE must be 'f32' or 'f64', got {DEFAULT_DTYPE!r}")

# Kernel path used by layers unless a layer config overrides it
DEFAULT_KERNEL_PATH = os.getenv("CVNN_KERNEL_PATH", "gauss")
if DEFAULT_KERNEL_PATH not in ("gauss", "naive"):
    raise ConfigError(
        f"CVNN_KERNEL_PATH must be 'gauss' or 'naive', got {DEFAULT_KERNEL_PATH!r}"
    )

# Gradient-check suite settings
try:
    GRADCHECK_TOL = float(os.getenv("CVNN_GRADCHECK_TOL", "1e-6"))
    GRADCHECK_POINTS = int(os.getenv("CVNN_GRADCHECK_POINTS", "10"))
except ValueError as e:
    raise ConfigError(f"Invalid gradcheck setting in environment: {e}") from e

# Get the root directory (one level up from complex_nets)
ROOT_DIR = Path(__file__).parent.parent.parent
RUNS_DIR = Path(os.getenv("CVNN_RUNS_DIR", str(ROOT_DIR / "runs")))
CONFIGS_DIR = Path(__file__).parent.parent / "configs"
