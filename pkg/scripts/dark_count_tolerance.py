"""Largest dark-count probability on Alice's side that still permits a
violation, as a function of Bob's efficiency (Alice's detector is perfect)."""

import argparse
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

from asymbell import chsh, i3322, max_tolerated_noise


@dataclass
class DarkConfig:
    eta_b: tuple[float, ...] = (0.55, 0.6, 0.65, 0.7, 0.75, 0.8)
    upper: float = 0.3
    tol: float = 2e-3
    restarts: int | None = None
    seed: int = 0
    output: Path = field(default_factory=lambda: Path("results/dark_tolerance.csv"))


def run(cfg: DarkConfig) -> None:
    cfg.output.parent.mkdir(parents=True, exist_ok=True)
    with open(cfg.output, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eta_b", "chsh_eps_max", "i3322_eps_max"])
        for eta in cfg.eta_b:
            eps = [max_tolerated_noise(poly, "dark", eta, restarts=cfg.restarts, seed=cfg.seed,
                                       upper=cfg.upper, tol=cfg.tol) for poly in (chsh(), i3322())]
            w.writerow([eta, f"{eps[0]:.4f}", f"{eps[1]:.4f}"])
            fh.flush()
            better = "i3322" if eps[1] > eps[0] else "chsh"
            print(f"eta_B={eta:.2f}: chsh {eps[0]:.4f}  i3322 {eps[1]:.4f}  ({better} tolerates more)")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta-b", type=float, nargs="+", default=list(DarkConfig.eta_b))
    ap.add_argument("--upper", type=float, default=DarkConfig.upper)
    ap.add_argument("--tol", type=float, default=DarkConfig.tol)
    ap.add_argument("--restarts", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", type=Path, default=Path("results/dark_tolerance.csv"))
    a = ap.parse_args()
    logging.basicConfig(level=logging.ERROR)
    run(DarkConfig(tuple(a.eta_b), a.upper, a.tol, a.restarts, a.seed, a.output))


if __name__ == "__main__":
    main()
