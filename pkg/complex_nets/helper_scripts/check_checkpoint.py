#!/usr/bin/env python3
"""Script to print a summary of a saved checkpoint and its run metrics."""

import os
import sys
from pathlib import Path
from colorama import Fore, Style
import numpy as np

# Add parent directory to Python path
parent_dir = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
sys.path.insert(0, parent_dir)

# Now we can import from src
from src import config  # noqa: E402
from src.utils.file_handler import FileHandler  # noqa: E402


def main() -> None:
    try:
        if len(sys.argv) > 1:
            run_dir = Path(sys.argv[1])
        else:
            run_dir = FileHandler.latest_run(config.RUNS_DIR)
            if run_dir is None:
                print(f"{Fore.YELLOW}No runs found in {config.RUNS_DIR}.{Style.RESET_ALL}")
                return

        state, meta = FileHandler.load_checkpoint(run_dir)
        print(f"\n{Fore.CYAN}📦 Checkpoint Summary{Style.RESET_ALL}")
        print("=" * 50)
        print(f"{Fore.GREEN}Location:{Style.RESET_ALL} {FileHandler.resolve_checkpoint(run_dir)}")
        print(f"{Fore.GREEN}Config Hash:{Style.RESET_ALL} {meta.config_hash}")
        print(f"{Fore.GREEN}Epoch:{Style.RESET_ALL} {meta.epoch}")
        print(f"{Fore.GREEN}Dtype:{Style.RESET_ALL} {meta.dtype}")
        print(f"{Fore.GREEN}Saved At:{Style.RESET_ALL} {meta.saved_at:%Y-%m-%d %H:%M:%S}")

        # Tensors
        print(f"\n{Fore.CYAN}Tensors:{Style.RESET_ALL}")
        print("-" * 50)
        total = 0
        for name, tensor in state.items():
            total += tensor.size
            rms = float(np.sqrt(np.mean(np.abs(tensor.numpy()) ** 2))) if tensor.size else 0.0
            print(
                f"{Fore.YELLOW}{name:<28}{Style.RESET_ALL} "
                f"{str(tensor.shape):<16} rms |z| = {rms:.4f}"
            )
        print(f"Total complex values: {total:,}")

        # Metrics
        metrics_path = FileHandler.resolve_checkpoint(run_dir).parent / FileHandler.METRICS_FILE
        if metrics_path.exists():
            frame = FileHandler.load_metrics(metrics_path)
            print(f"\n{Fore.CYAN}Last Epochs:{Style.RESET_ALL}")
            print("-" * 50)
            print(frame.tail(5).to_string(index=False))

    except Exception as e:
        print(f"\n{Fore.RED}❌ Error: {str(e)}{Style.RESET_ALL}")


if __name__ == "__main__":
    main()
