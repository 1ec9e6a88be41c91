"""Smoke test for the compiled extension. Run after `maturin develop`."""

import math

import treerep

star = treerep.DistanceMatrix([[0, 2, 2], [2, 0, 2], [2, 2, 0]])
tree = treerep.treerep(star)
assert tree.node_count() == 4 and tree.steiner_count() == 1
assert sorted(w for _, _, w in tree.edges()) == [1.0, 1.0, 1.0]

src, d = treerep.random_tree_metric(3, seed=1)
fit = treerep.treerep(d, seed=4, tol=1e-9)
assert fit.node_count() == src.node_count()
assert treerep.distortion(fit.metric(), d) < 1e-12
assert treerep.delta(d, "fixed") < 1e-9

nj = treerep.neighbor_join(d)
assert nj.node_count() == 2 * d.n - 2

h = treerep.sample_hyperboloid(60, 3, scale=2.0, seed=3)
best = treerep.treerep(h, runs=5, threads=2)
refined, before, after = treerep.refine(best, h, samples=400, seed=1)
assert after <= before

g = treerep.Graph([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")])
c4 = g.distances()
assert treerep.delta(c4) == 1.0
assert 0.0 < treerep.mean_average_precision(g, treerep.treerep(c4).metric()) <= 1.0

edge = treerep.Tree.from_text("a b 1\n")
points = {name: (x, y) for name, x, y in treerep.sarkar_embed(edge, tau=2.0)}
assert math.isclose(treerep.poincare_distance(points["a"], points["b"]), 2.0, rel_tol=1e-9)

try:
    treerep.DistanceMatrix([[0, 1], [2, 0]])
except ValueError:
    pass
else:
    raise AssertionError("asymmetric matrix accepted")

print("ok")
