"""Vanishing flag of the c(N) diagnostic for lacunary fields.

A lacunary field built with exponent alpha0 is probed at a grid of exponents;
below alpha0 the curve should vanish, at alpha0 it should not.
"""

import argparse
from dataclasses import dataclass, field

import numpy as np

from hodgeflow import besov
from hodgeflow.fields import lacunary
from hodgeflow.torus import TorusGrid


@dataclass
class DichotomyConfig:
    N: int = 256
    J: int = 6
    seed: int = 0
    build_alphas: list = field(default_factory=lambda: [0.3, 0.5, 0.7])
    probe_offsets: list = field(default_factory=lambda: [-0.2, -0.1, 0.0])
    p: float = 3.0


def main(cfg):
    grid = TorusGrid(2, cfg.N)
    print(f"{'built':>6} {'probe':>6} {'tail_slope':>11} {'vanishing':>10}")
    for a0 in cfg.build_alphas:
        u = lacunary(grid, a0, cfg.J, seed=cfg.seed)
        for d in cfg.probe_offsets:
            a = a0 + d
            if not 0 < a < 1:
                continue
            c = besov.cN_diagnostic(u, a, cfg.p)
            print(f"{a0:6.2f} {a:6.2f} {c.tail_slope:11.3f} {str(c.vanishing):>10}")
    print("tail slopes for a smooth mode, for reference:",
          np.round([besov.cN_diagnostic(lacunary(grid, 0.5, 1), a).tail_slope for a in (0.3, 0.5)], 3))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=DichotomyConfig.N)
    ap.add_argument("--J", type=int, default=DichotomyConfig.J)
    ap.add_argument("--seed", type=int, default=DichotomyConfig.seed)
    a = ap.parse_args()
    main(DichotomyConfig(a.N, a.J, a.seed))
