# A process whose weighted-square condition holds while the plain coefficient
# sum diverges: Var(S_n)/n grows without bound, so there is no sqrt(n) CLT,
# and the test harness refuses to run one.
import stationlab as sl

seq = sl.log_power(1.0, 1.0)  # a_k = 1/((k+2) ln(k+2))
print("condition checks:")
for verdict in (sl.check_gl(seq, grid=(256,)), sl.check_h(seq, grid=(256,))):
    print(f"  {verdict.condition}: {verdict.classification}")

model = sl.CausalLinearModel(seq, sl.rademacher_space(), lag=1 << 23, model_id="divergent")
table = sl.boundedness_diagnostic(model, [10**3, 10**4, 10**5, 10**6], count=200, master_seed=3)
print(f"\nflag: {table.flag}")
print(f"{'n':>8s} {'Var/n':>10s} {'q90(|S_n|/sqrt n)':>20s}")
for n, v, q in zip(table.horizons, table.var_over_n, table.q90_abs):
    print(f"{n:8d} {v:10.4f} {q:20.4f}")

small = sl.CausalLinearModel(seq, sl.rademacher_space(), lag=1 << 12, model_id="divergent")
try:
    sl.clt_test(small, 256, 2000, 1)
except sl.DivergentReferenceError as e:
    print(f"\nclt_test refused, as it must: {e}")
