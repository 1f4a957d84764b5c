"""Flip the selection story: strivers instead of stars.

With selection_sign=-1 the latently weaker workers are the ones who take
the certification, so the naive contrast now underestimates the effect by
a wide margin. The DML estimate built on text features barely moves: the
orthogonal score doesn't care which way the confounding points as long as
the nuisances track it.
"""
import dataclasses

import textdml as td
from textdml.bench import ExperimentPlan
from textdml.dml import crossfit_nuisance, naive_ate, plr_estimate

plan = ExperimentPlan()

for sign, story in ((1, "stars self-select in"), (-1, "strivers self-select in")):
    cfg = dataclasses.replace(plan.config, selection_sign=sign)
    print(f"selection_sign={sign:+d}  ({story})")
    for seed in range(3):
        ds = td.generate(cfg, plan.emb_config, n=2000, seed=seed)
        naive = naive_ate(ds)
        pair = crossfit_nuisance(ds, plan.mlp_spec, "text", k=5, rng_seed=seed)
        dml = plr_estimate(ds, pair)
        print(
            f"  seed {seed}: naive {naive.bias_pct:+7.1f}%   "
            f"dml-text-mlp {dml.bias_pct:+6.1f}%"
        )
    print()
