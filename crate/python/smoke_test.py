"""Quick check of the compiled extension. Run after `maturin develop`."""

import math

import lvswitch

e0 = lvswitch.Environment(1, 5, 2, 8, 3, 3)
e1 = lvswitch.Environment(2, 11, 1, 9, 2, 1.8)
assert e0.classify() == "Type1" and e1.classify() == "Type2"
pair = lvswitch.EnvPair(e0, e1)

l0, l1 = lvswitch.uv_to_rates(pair, 0.4, 3.0)
u, v = lvswitch.rates_to_uv(pair, l0, l1)
assert abs(u - 0.4) < 1e-12 and abs(v - 3.0) < 1e-12

ly = lvswitch.lambda_y(pair, 0.5, 5.0)
est, se = lvswitch.estimate_lambda(pair, *lvswitch.uv_to_rates(pair, 0.5, 5.0), species_name="y", t_max=5e3, seed=3)
assert abs(est - ly) < 5 * se + 1e-3, (ly, est, se)

us, vs = lvswitch.curve_grid(pair, "y", 50)
assert len(us) == 50 and all(v >= 0 or math.isinf(v) for v in vs)

info = lvswitch.threshold_analysis(pair)
assert {"alpha", "alpha_bar", "coeff_a"} <= set(info)

ug, vg, labels = lvswitch.regime_map(pair, n=20)
assert len(labels) == 20 and len(labels[0]) == 20

ws = lvswitch.four_regime_search(pair, n=60)
assert sorted(w[0] for w in ws) == ["extinction_x", "extinction_y", "persistence", "random_extinction"]

t, x, y, i = lvswitch.simulate(pair, 1.0, 2.0, 10.0, seed=1)
assert t[0] == 0.0 and abs(t[-1] - 10.0) < 1e-9 and set(i) <= {0, 1}

names = [name for name, _ in lvswitch.catalog()]
assert len(names) == 7

try:
    lvswitch.Environment(1, 2, 3, 4, -1, 1)
except ValueError:
    pass
else:
    raise AssertionError("negative rate accepted")

print("ok:", ly, est, se, names)
