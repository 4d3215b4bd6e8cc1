import time
from wbansim.sweep import sweep, DENSITY_GRID, RATE_GRID
from wbansim.engine import run_convergence_trial
from oracles import spearman

t0 = time.time()
seeds = list(range(10))
out = {}
for scen, grid in (("density", DENSITY_GRID), ("rate", RATE_GRID)):
    recs = sweep(scen, ("qqmr", "greedy"), seeds)
    out[scen] = recs
    for proto in ("qqmr", "greedy"):
        for metric in ("pdr_pct", "eed_s", "ro", "ec_j", "hc"):
            means = []
            for v in grid:
                vals = [getattr(r, metric) for r in recs
                        if r.protocol == proto and r.param_value == v
                        and getattr(r, metric) is not None]
                means.append(sum(vals) / len(vals))
            rho = spearman(list(grid), means)
            print(f"{scen} {proto} {metric}: "
                  + " ".join(f"{m:.4f}" for m in means) + f"  rho={rho:+.2f}")
    top = grid[-1]
    for metric in ("pdr_pct",):
        q = [r.pdr_pct for r in recs if r.protocol == "qqmr" and r.param_value == top]
        g = [r.pdr_pct for r in recs if r.protocol == "greedy" and r.param_value == top]
        print(f"{scen} TOP {top}: qqmr {sum(q)/len(q):.3f} vs greedy {sum(g)/len(g):.3f}")
print(f"sweep wall {time.time()-t0:.1f}s")

t1 = time.time()
eps = []
for s in range(10):
    _tr, rep = run_convergence_trial(s)
    eps.append(rep.converged_episode)
print("converged:", eps, "ok:", sum(1 for e in eps if e is not None and e < 400))
print(f"conv wall {time.time()-t1:.1f}s")
