# Quenched behaviour: pin the past, average over futures. For semi-linear
# processes the drift-removed approximation error does not depend on the
# pinned past at all; the conditional drift itself is Lemma-3.1 material and
# dies at rate 1/n after the lag window saturates.
import math

import stationlab as sl

model = sl.linear_as_semilinear(
    sl.CausalLinearModel(sl.geometric(0.5), sl.rademacher_space(), model_id="rho12")
)
increment = sl.limit_increment(model)
pasts = sl.draw_pasts(model, 5, master_seed=42)

print("per-past reduced MA error at n = 1024 (R = 5000 futures each):")
for past in pasts:
    entry = sl.ma_error_mc(model, increment, 1024, 5000, 7, past=past, remove_drift=True)
    drift = sl.conditional_expectation_S(model, 1024, past)
    print(f"  past {past.past_id}: {entry.value:.6f} (se {entry.se:.1e}), "
          f"exact drift E(S_n|F_0) = {drift:+.4f}")

annealed = sl.ma_error_mc(model, increment, 1024, 5000, 8, remove_drift=True)
print(f"annealed reference: {annealed.value:.6f} (se {annealed.se:.1e})")

print()
print("quenched CLT per past (KS against N(0, E D^2), n = 8192):")
for res in sl.clt_test(model, 8192, 5000, 9, quenched_pasts=pasts):
    print(f"  past {res.past_id}: D = {res.statistic:.5f}, pass = {res.passed}")

print()
print("drift decay: n^-1 E max_k<=n E(S_k|F_0)^2 over 2000 pasts")
many = sl.draw_pasts(model, 2000, master_seed=5)
for n in (64, 256, 1024, 4096, 16384):
    mx = sl.models.max_conditional_drift_batch(model, n, many)
    print(f"  n={n:6d}: {sum(float(v)**2 for v in mx)/len(mx)/n:.3e}")
