"""How recovery degrades with noise: a small seeded sweep.

Run with ``python3 demos/03_snr_sweep.py [out_dir]`` (about a minute).

The experiment runner takes a JSON configuration (``configs/snr_sweep.json``),
expands it into cells (here one per SNR level), runs every realization with its
own derived seed and writes ``results.csv`` and ``aggregate.csv``.  The same
run is available from the shell as
``polyfact experiment demos/configs/snr_sweep.json --out runs/snr``.
"""
import json
import os
import sys
import tempfile

from polyfact.experiment import ExperimentConfig, aggregate, run_experiment

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "configs", "snr_sweep.json")) as fh:
    cfg = ExperimentConfig.from_dict(json.load(fh))

out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="snr_sweep_")
records = run_experiment(cfg, out_dir=out)
print(f"{len(records)} runs written to {out}\n")
print(f"{'SNR (dB)':>9} {'mean SIR':>9} {'std':>6} {'failures':>9}")
for row in aggregate(records, cfg.cells()):
    print(f"{row['snr_db']!s:>9} {row['mean_sir_db']:9.1f} {row['std_sir_db']:6.1f} {row['failures']:>9}")
print("\nMean SIR rises with SNR; without noise the factors are recovered essentially exactly.")
