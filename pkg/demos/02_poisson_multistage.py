# %% [markdown]
# # Multi-stage SAA on the Poisson problem
# F(theta) = E[-X Y theta + exp(theta X)] with X, Y ~ Poisson(1), minimised at 0.
# Each stage minimises a sample average on a growing prefix of one sample
# sequence, warm-started at the previous stage.

# %%
from saa_bls import Poisson1D, RaConfig, run, schedule
from saa_bls.experiments import SweepConfig, log_grid, loglog_slope, rho_jb, sweep
from saa_bls.problems import oracle_poisson1d

problem = Poisson1D()
cfg = RaConfig(theta0=(1.0,), budget=10**6, alpha_prime=1.0, delta=0.95)

# %%
# closed-form objective, for reference
for t in (-0.5, 0.0, 0.5):
    print(t, oracle_poisson1d(t))

# %%
# the schedule only depends on B, delta, kappa and tau
for j in (1, 2, 5, 10, 20):
    print(schedule(cfg.budget, cfg, j))

# %%
res = run(problem, cfg, seed=7)
print("theta_hat", res.theta_hat, "stages used", res.j_used, "left over", res.remaining)
for st, r in res.stage_records[:6]:
    print(f"stage {st.j:2d}  n={st.n:7d}  iters={r.iterations:3d}  spent={r.consumed:7d}  {r.stop_reason.value}")

# %%
# small replication sweep; expect a slope near -1/2
sweep_cfg = SweepConfig(problem=problem, budget_grid=log_grid(4, 6, 5), replications=10, ra=cfg)
out = sweep(sweep_cfg)
for s in out:
    print(f"B={s.B:8d}  mean error={s.mean_error:.4f}  mean J_B={s.mean_jb:.1f}")
print("slope", loglog_slope(sweep_cfg.budget_grid, [s.mean_error for s in out]))
print("rho_JB", rho_jb(out))
