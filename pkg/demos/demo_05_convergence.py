"""
Error against record length
===========================

Runs the seeded experiment harness for growing N and writes the
per-seed curves as CSV and an SVG chart.  The same thing is available as
``sarjump sweep`` followed by ``sarjump plot``.
"""

import sys
from pathlib import Path

from sarjump import experiment as exp

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "convergence-demo")

cfg = exp.ExperimentConfig(sigma2=[0.03], N=[10**2, 10**3, 10**4, 10**5, 10**6],
                           seeds=[0, 1, 2], output_dir=str(out_dir))
rows = exp.run_convergence_sweep(cfg)
for r in rows:
    print(f"seed {r['seed']}  N = {r['N']:>7}  error {r['norm']:.4f}")

exp.write_svg(rows, out_dir / "convergence.svg")
print(f"\nwrote {out_dir / 'sweep.csv'} and {out_dir / 'convergence.svg'}")
