"""Write the plot-ready data for every figure into one directory.

    python scripts/reproduce_figures.py [OUT_DIR]
"""
import json
import sys
import tempfile
from pathlib import Path

from kmm_portfolio.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(*argv):
    code = main(list(argv))
    if code:
        sys.exit(code)


if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "out/figures")
    run("frontier", "--config", str(CONFIGS / "frontier.json"), "--out", str(out))
    run("fixed-point", "--config", str(CONFIGS / "frontier.json"), "--out", str(out))
    run("compare", "--config", str(CONFIGS / "default.json"), "--out", str(out))
    for name in ("sweep_gamma", "sweep_beta", "sweep_sigma_mu"):
        run("sweep", "--config", str(CONFIGS / f"{name}.json"), "--out", str(out))

    # one extra series: the sigma_mu sweep for the CARA investor
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "cara_sweep.json"
        cfg.write_text(json.dumps({
            "utility": {"family": "cara", "alpha": 1.0, "beta": None},
            "sweep": {"parameter": "sigma_mu", "series_gamma": []},
        }))
        run("sweep", "--config", str(cfg), "--out", str(out / "cara"))
