#!/usr/bin/env python3
"""Script to plot loss and accuracy curves of a training run."""

import os
import sys
from pathlib import Path
from colorama import Fore, Style
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402

# Add parent directory to Python path
parent_dir = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
sys.path.insert(0, parent_dir)

# Now we can import from src
from src import config  # noqa: E402
from src.utils.file_handler import FileHandler  # noqa: E402

SMOOTHING_WINDOW = 5


def plot_run(run_dir: Path) -> Path:
    """Save loss (and accuracy, when present) curves to <run_dir>/plots."""
    frame = FileHandler.load_metrics(run_dir)
    plots_dir = run_dir / "plots"
    plots_dir.mkdir(parents=True, exist_ok=True)

    plt.style.use("bmh")
    plt.rcParams.update({
        "figure.facecolor": "white",
        "axes.facecolor": "white",
        "axes.grid": True,
        "grid.alpha": 0.3
    })

    has_accuracy = frame["accuracy"].notna().any()
    fig, axes = plt.subplots(1, 2 if has_accuracy else 1, figsize=(14 if has_accuracy else 8, 5))
    loss_ax = axes[0] if has_accuracy else axes

    losses = frame.melt(
        id_vars="epoch", value_vars=["train_loss", "eval_loss"], var_name="split", value_name="loss"
    )
    sns.lineplot(data=losses, x="epoch", y="loss", hue="split", ax=loss_ax)
    smoothed = frame["train_loss"].rolling(SMOOTHING_WINDOW, min_periods=1).mean()
    loss_ax.plot(frame["epoch"], smoothed, linestyle="--", color="gray", label="train (smoothed)")
    loss_ax.set_yscale("log")
    loss_ax.set_title("Loss")
    loss_ax.legend()

    if has_accuracy:
        sns.lineplot(data=frame, x="epoch", y="accuracy", ax=axes[1], color="tab:green")
        axes[1].set_ylim(0, 1.05)
        axes[1].set_title("Test Accuracy")

    fig.tight_layout()
    output = plots_dir / "metrics.png"
    fig.savefig(output, dpi=300, bbox_inches="tight")
    plt.close(fig)
    return output


def main() -> None:
    try:
        run_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else FileHandler.latest_run(config.RUNS_DIR)
        if run_dir is None:
            print(f"{Fore.YELLOW}No runs found in {config.RUNS_DIR}.{Style.RESET_ALL}")
            return
        output = plot_run(run_dir)
        frame: pd.DataFrame = FileHandler.load_metrics(run_dir)
        print(f"{Fore.GREEN}📈 Plotted {len(frame)} epochs to {output}{Style.RESET_ALL}")
    except Exception as e:
        print(f"\n{Fore.RED}❌ Error: {str(e)}{Style.RESET_ALL}")


if __name__ == "__main__":
    main()
