# %% [markdown]
# # Heavy-tailed gradient noise
# Same objective plus W theta with W ~ t(1.501), so the gradient noise only
# has moments of order below 1.501.  The expected error may be infinite, so
# the 10% trimmed mean over replications is reported instead.

# %%
from saa_bls import HeavyTailed1D, RaConfig
from saa_bls.experiments import SweepConfig, log_grid, loglog_slope, sweep

cfg = SweepConfig(
    problem=HeavyTailed1D(1.501),
    budget_grid=log_grid(4, 6, 5),
    replications=10,
    ra=RaConfig(theta0=(1.0,), alpha_prime=0.5, delta=0.41),
    error_metric="trimmed",
)

# %%
out = sweep(cfg)
for s in out:
    print(f"B={s.B:8d}  trimmed={s.trimmed_error:.4f}  mean={s.mean_error:.4f}  J_B={s.mean_jb:.2f}")

# %%
# target rate B^(-1/3); on a grid this short the slope tends to come out steeper
print("slope", loglog_slope(cfg.budget_grid, [s.trimmed_error for s in out]))
