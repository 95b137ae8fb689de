# %% [markdown]
# # One stage versus many
# The single-stage baseline fixes n = B^((1+alpha)/(1+3alpha)) up front and
# runs GD-BLS with zero tolerance until the budget is gone.  Its error decays
# like B^(-1/4) for alpha = 1, against B^(-1/2) for the multi-stage method.

# %%
from saa_bls import Poisson1D, RaConfig
from saa_bls.experiments import SweepConfig, log_grid, loglog_slope, sweep

grid = log_grid(4, 6, 5)
base = dict(problem=Poisson1D(), budget_grid=grid, replications=10, ra=RaConfig(theta0=(1.0,), alpha_prime=1.0))

# %%
single = sweep(SweepConfig(method="single", **base))
multi = sweep(SweepConfig(method="ra", **base))
for s, m in zip(single, multi):
    print(f"B={s.B:8d}  single={s.mean_error:.4f}  multi={m.mean_error:.4f}")

# %%
print("single-stage slope", loglog_slope(grid, [s.mean_error for s in single]))
print("multi-stage slope ", loglog_slope(grid, [s.mean_error for s in multi]))
