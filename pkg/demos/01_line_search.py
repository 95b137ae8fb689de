# %% [markdown]
# # Backtracking line search on a quadratic
# Gradient descent where each step starts at v = 1 and is halved until the
# sufficient-decrease test passes.  On g(x) = x'Ax/2 no accepted step can be
# smaller than beta / lambda_max(A).

# %%
import numpy as np

from saa_bls.checks import random_spd
from saa_bls.gd_bls import backtrack, run_deterministic

rng = np.random.default_rng(0)
A, lam_max = random_spd(rng, 4)
g = lambda x: 0.5 * x @ A @ x
grad = lambda x: A @ x
x0 = rng.standard_normal(4)

# %%
# one line search by hand
v, trial, evals = backtrack(g, x0, grad(x0), g(x0), beta=0.5)
print(f"step {v}, found after {evals} trial evaluations, g: {g(x0):.4f} -> {trial:.4f}")

# %%
xs, steps = run_deterministic(g, grad, x0, T=100, beta=0.5, return_steps=True)
gaps = np.array([g(x) for x in xs])
print("smallest step:", min(steps), " floor beta/lambda_max:", 0.5 / lam_max)

# %%
# optimality gap against the O(1/T) bound ||x0||^2 lambda_max / (2 beta T)
for T in (1, 10, 50, 100):
    bound = (x0 @ x0) * lam_max / (2 * 0.5 * T)
    print(f"T={T:4d}  gap={gaps[T]:.3e}  bound={bound:.3e}")
