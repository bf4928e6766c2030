"""Strong-error table for the Euler scheme driven by the closed-form feedback.

    python scripts/replication_study.py [N_PATHS] [SEED]
"""
import sys
import warnings

from kmm_portfolio import GaussianSOD, MarketParams, SimConfig, convergence_study, solve_cara, solve_crra, solve_hara

n_paths = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 20240611
steps = [2**k for k in range(5, 11)]

mp = MarketParams()
sod = GaussianSOD.from_sigma0(mp, 2.0)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    sols = {
        "crra": solve_crra(mp, sod, -0.5, 1 / 3),
        "hara": solve_hara(mp, sod, -0.5, 1 / 3, 1.0),
        "cara": solve_cara(mp, sod, -0.5, 1.0),
    }

cfg = SimConfig(n_paths, steps[-1], seed)
for name, sol in sols.items():
    study = convergence_study(sol, cfg, steps)
    print(f"{name}: mean-error slope {study.slope:.3f}, max-error slope {study.max_slope:.3f}")
    for n, mean, mx in zip(study.step_counts, study.mean_errors, study.max_errors):
        print(f"  {n:5d} steps  mean {mean:.3e}  max {mx:.3e}")
