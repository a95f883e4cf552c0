# Distributional checks at desk scale: S_n/sqrt(n) against N(0, ||D||^2) and
# the path supremum against the reflected-normal law.
import stationlab as sl

model = sl.CausalLinearModel(sl.geometric(0.5), sl.normal_space(), model_id="rho12-normal")
sigma2 = sl.limit_increment(model).norm2 ** 2
print(f"limit variance from the oracle: sigma^2 = {sigma2:.4f}")

res = sl.clt_test(model, 4096, 20_000, master_seed=1)
print(f"CLT  KS: D = {res.statistic:.5f}, p = {res.pvalue:.3f}, pass = {res.passed}")

res = sl.wip_sup_test(model, 32_768, 2_500, master_seed=1)
print(f"WIP sup KS: D = {res.statistic:.5f}, p = {res.pvalue:.3f}, pass = {res.passed}")

# The sup functional needs a larger horizon than the endpoint: the discrete
# maximum sits ~0.58*sigma/sqrt(n) below the continuous supremum and the
# walk stays nonpositive with probability ~(pi n)^(-1/2), an atom at zero.
for n in (1024, 4096):
    try:
        r = sl.wip_sup_test(model, n, 20_000, master_seed=1)
        print(f"  n={n}: D = {r.statistic:.5f}, pass = {r.passed}")
    except sl.TiesError as e:
        print(f"  n={n}: refused ({e})")
