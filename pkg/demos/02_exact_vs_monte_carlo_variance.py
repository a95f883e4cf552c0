# Var(S_n) two ways: the coordinate-decomposition oracle (exact for the
# truncated model) against plain Monte Carlo.
import numpy as np

import stationlab as sl

models = [
    sl.CausalLinearModel(sl.finite([1.0]), sl.rademacher_space(), model_id="iid"),
    sl.CausalLinearModel(sl.finite([1.0, -1.0]), sl.rademacher_space(), model_id="coboundary"),
    sl.CausalLinearModel(sl.geometric(0.5), sl.rademacher_space(), model_id="rho=1/2"),
]

R = 10_000
for model in models:
    print(f"--- {model.model_id}")
    for n in (16, 256, 4096):
        exact = sl.exact_variance(model, n)
        batch = sl.replicate_batch(model, n, R, master_seed=7)
        mc = float(np.var(batch.s_n, ddof=1))
        se = exact * np.sqrt(2.0 / (R - 1))
        print(f"  n={n:5d}: exact {exact:12.4f}   MC {mc:12.4f}   (z = {(mc-exact)/se:+.2f})")

# the coboundary telescopes: Var(S_n) = 2 sigma^2 forever, so S_n/sqrt(n)
# collapses instead of converging to a normal law
