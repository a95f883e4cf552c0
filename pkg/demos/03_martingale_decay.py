# The normalised approximation error n^{-1} ||S_n - M_n||^2 for the
# truncated Gordin increment, exactly and by simulation.
import stationlab as sl

model = sl.CausalLinearModel(sl.geometric(0.5), sl.rademacher_space(), model_id="rho12")
increment = sl.limit_increment(model)
print(f"increment: D = {increment.coefficient:.6f} * eps_0,  ||D||_2 = {increment.norm2:.6f}")
print("Cauchy diagnostic ||D_(2N) - D_N||_2 on the truncation grid:")
for trunc, gap in increment.cauchy[:6]:
    print(f"  N = {trunc:3d}: {gap:.3e}")

print()
print(f"{'n':>6s} {'exact':>12s} {'monte carlo':>14s} {'se':>9s}")
for n in [2**j for j in range(6, 15)]:
    exact = sl.ma_error_exact(model, increment, n)
    est = sl.ma_error_mc(model, increment, n, 5000, 19)
    print(f"{n:6d} {exact:12.6f} {est.value:14.6f} {est.se:9.1e}")

# ~ c/n decay: multiply each row by n and the product is flat.
