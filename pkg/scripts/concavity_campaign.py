"""Run the concavity campaign over the standard (n, f_max) grid and print a table.

    python3 scripts/concavity_campaign.py --trials 100000 --out results/campaign
"""

import argparse
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from sigmacurv import concavity as cc


@dataclass
class CampaignConfig:
    configs: list = field(default_factory=lambda: [(3, 7.0), (4, 5.0), (5, 3.0)])
    trials: int = 100_000
    seed: int = 0
    region: str = "hypothesis"
    workers: int = 1
    out: str = "results/campaign"


def run(cfg: CampaignConfig) -> list[dict]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for n, f_max in cfg.configs:
        rep = cc.verify(n, f_max, cfg.trials, seed=cfg.seed, region=cfg.region, workers=cfg.workers)
        d = rep.to_dict()
        (out / f"campaign_n{n}.json").write_text(json.dumps(d, sort_keys=True, indent=2) + "\n")
        if rep.violations or rep.hypothesis_violated:
            cc.write_counterexamples_csv(out / f"rows_n{n}.csv", rep.violations + rep.hypothesis_violated)
        rows.append(d)
        print(
            f"n={n} f_max={f_max:g} K0={d['k0']:.4f} trials={d['trials']} "
            f"violations={d['n_violations']} below-hypothesis={len(d['hypothesis_violated'])} "
            f"min_lhs_rel={d['min_lhs_relative']:.3e} min_eig={d['min_eig']:.3e} "
            f"decomp={d['max_decomposition_error']:.1e} det={d['max_det_error']:.1e} "
            f"({d['elapsed_seconds']:.1f}s)"
        )
    (out / "config.json").write_text(json.dumps(asdict(cfg), indent=2) + "\n")
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=CampaignConfig.trials)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--region", choices=["hypothesis", "below-threshold"], default="hypothesis")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=CampaignConfig.out)
    a = p.parse_args()
    run(CampaignConfig(trials=a.trials, seed=a.seed, region=a.region, workers=a.workers, out=a.out))


if __name__ == "__main__":
    main()
