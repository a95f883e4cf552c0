# Holder functions of a semi-linear process: projections lose their closed
# form, but their norms obey the certified bound 2C || |alpha_i|^gamma ||,
# which is enough for the invariance principle via the summability route.
import stationlab as sl
from stationlab import martingale as mg

base = sl.linear_as_semilinear(
    sl.CausalLinearModel(sl.geometric(0.5), sl.rademacher_space(), model_id="base")
)
model = sl.HolderModel(base, sl.abs_power(1.0), centering_replicates=200_000,
                       model_id="holder-abs")
print(f"centering E f(Y_0) = {model.centering:.5f} (se {model.centering_se:.1e})")

print(f"\n{'lag':>4s} {'estimate':>11s} {'bound 2C||a_i||':>16s}")
for i in (0, 1, 2, 4, 8, 16):
    est = sl.p0_projection(model, i, replicates=1 << 13)
    print(f"{i:4d} {est.norm2:11.5f} {model.projection_bound(i):16.5f}")

# the sup-functional test runs off an estimated limit variance: two
# conditionally independent draws of the increment per sampled past make the
# squared-norm estimate unbiased. soft_clip is odd and the base symmetric,
# so the centering constant is exactly 0 (an estimated one would drift the
# normalised walk by sqrt(n) times its error).
clip = sl.HolderModel(base, sl.soft_clip(2.0), centering=0.0, model_id="holder-clip")
est = mg.estimate_gordin_norm2(clip, replicates=1 << 15)
print(f"\nsoft-clip model: ||D||^2 = {est.norm2sq:.4f} (se {est.norm2sq_se:.4f})")
res = sl.wip_sup_test(clip, 16_384, 2_500, master_seed=3, sigma2=est.norm2sq)
print(f"WIP sup KS: D = {res.statistic:.5f}, p = {res.pvalue:.3f}, pass = {res.passed}")
