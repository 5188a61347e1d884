"""Threshold efficiency of Bob versus the entanglement angle theta.

Writes one CSV per (inequality, noise level) into --outdir. With p > 0 the
curve develops an interior minimum; with p = 0 it falls monotonically to the
small-theta plateau.
"""

import argparse
import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from asymbell import StateFamily, chsh, i3322, sweep_theta


@dataclass
class Fig1Config:
    noise_levels: tuple[float, ...] = (0.0, 0.01, 0.03)
    theta_max: float = math.pi / 4
    theta_min: float = 0.005
    points: int = 24
    restarts: int | None = None
    seed: int = 0
    outdir: Path = field(default_factory=lambda: Path("results/fig1"))


def run(cfg: Fig1Config) -> None:
    cfg.outdir.mkdir(parents=True, exist_ok=True)
    grid = np.geomspace(cfg.theta_max, cfg.theta_min, cfg.points)
    for poly in (chsh(), i3322()):
        for p in cfg.noise_levels:
            fam = StateFamily("background", p=p)
            pts = sweep_theta(poly, fam, grid, restarts=cfg.restarts, seed=cfg.seed)
            path = cfg.outdir / f"{poly.name}_p{p:g}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["theta", "p", "threshold"])
                for pt in pts:
                    w.writerow([f"{pt.theta:.6g}", p,
                                "" if not np.isfinite(pt.threshold) else f"{pt.threshold:.6f}"])
            best = min((pt for pt in pts if np.isfinite(pt.threshold)),
                       key=lambda pt: pt.threshold, default=None)
            where = f"min {best.threshold:.4f} at theta={best.theta:.4g}" if best else "no violation"
            print(f"{poly.name} p={p:g}: {where} -> {path}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--noise", type=float, nargs="+", default=list(Fig1Config.noise_levels))
    ap.add_argument("--points", type=int, default=Fig1Config.points)
    ap.add_argument("--restarts", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--outdir", type=Path, default=Path("results/fig1"))
    a = ap.parse_args()
    logging.basicConfig(level=logging.ERROR)
    run(Fig1Config(tuple(a.noise), points=a.points, restarts=a.restarts, seed=a.seed,
                   outdir=a.outdir))


if __name__ == "__main__":
    main()
