"""Minimal threshold (over theta and settings) versus background noise p.

Prints a table of both inequalities and the interpolated noise level where
I3322 stops beating CHSH.
"""

import argparse
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from asymbell import chsh, i3322, noise_tradeoff


@dataclass
class Fig2Config:
    grid: tuple[float, ...] = tuple(np.round(np.linspace(0.0, 0.1, 11), 4))
    restarts: int | None = None
    seed: int = 0
    workers: int | None = None
    output: Path = field(default_factory=lambda: Path("results/fig2_background.csv"))


def crossover(grid, a, b):
    """First zero of b - a by linear interpolation, or None."""
    d = np.asarray(b) - np.asarray(a)
    for k in range(len(d) - 1):
        if d[k] < 0 <= d[k + 1]:
            return grid[k] + (grid[k + 1] - grid[k]) * d[k] / (d[k] - d[k + 1])
    return None


def run(cfg: Fig2Config) -> None:
    kw = dict(restarts=cfg.restarts, seed=cfg.seed, workers=cfg.workers)
    a = [p.threshold for p in noise_tradeoff(chsh(), "background", cfg.grid, **kw)]
    b = [p.threshold for p in noise_tradeoff(i3322(), "background", cfg.grid, **kw)]
    cfg.output.parent.mkdir(parents=True, exist_ok=True)
    with open(cfg.output, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p", "chsh", "i3322"])
        for row in zip(cfg.grid, a, b):
            w.writerow([f"{row[0]:g}", f"{row[1]:.6f}", f"{row[2]:.6f}"])
            print(f"p={row[0]:<6g} chsh={row[1]:.4f} i3322={row[2]:.4f}")
    x = crossover(cfg.grid, a, b)
    print("crossover:", "none in grid" if x is None else f"p ~ {x:.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=float, nargs="+")
    ap.add_argument("--restarts", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--output", type=Path, default=Path("results/fig2_background.csv"))
    a = ap.parse_args()
    logging.basicConfig(level=logging.ERROR)
    cfg = Fig2Config(restarts=a.restarts, seed=a.seed, workers=a.workers, output=a.output)
    if a.grid:
        cfg.grid = tuple(a.grid)
    run(cfg)


if __name__ == "__main__":
    main()
