# Which summability conditions hold for a coefficient sequence, decided from
# its analytic tail model rather than from truncated sums.
import stationlab as sl

sequences = {
    "geometric(1/2)": sl.geometric(0.5),
    "power_law(p=1) (harmonic)": sl.power_law(1.0),
    "power_law(p=3/2)": sl.power_law(1.5),
    "dyadic_spikes(b=3/4)": sl.counterexample_sequence(0.75),
    "log_power(1,1)  u_k=1/((k+2)ln(k+2))": sl.log_power(1.0, 1.0),
}

print(f"{'sequence':40s} {'GL':>10s} {'H':>10s} {'MW-strong':>10s} {'lemma q=2':>10s}")
for name, seq in sequences.items():
    row = [
        sl.check_gl(seq, grid=(256,)).classification,
        sl.check_h(seq, grid=(256,)).classification,
        sl.check_mw(seq, grid=(256,)).classification,
        sl.lemma_series_lhs(seq, 2.0, grid=(256,)).classification,
    ]
    print(f"{name:40s} " + " ".join(f"{c:>10s}" for c in row))

# The dyadic-spike family is the interesting row: the first-power sum and the
# weighted square sum both converge, yet the square-root tail sum does not,
# so the strongest maximal-approximation route is genuinely stronger.
print()
seq = sl.counterexample_sequence(0.75)
print("dyadic spikes, partial sums of the MW series (it keeps climbing):")
for n, value in sl.check_mw(seq).partial_sums[::4]:
    print(f"  N = {n:>8d}: {value:.4f}")
