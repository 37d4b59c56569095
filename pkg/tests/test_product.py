import math
from fractions import Fraction

import numpy as np

from pathprob import mc
from pathprob.dynamics import Configuration, kappa
from pathprob.models import model_constants
from pathprob.product import ALIVE, DEAD, FINAL, classify, contraction_constant
from pathprob.regions import region_of

F = Fraction


def test_vertex_count_is_full_product(unit_graph):
    # 2 states x 3 locations x 4 regions of a unit-ceiling clock
    assert unit_graph.vertex_count == 24
    assert len(unit_graph.codes) == 4


def test_interior_start_has_edge_to_goal(unit_graph):
    v = unit_graph.vertex_of("s", "q0", (F(1, 2),))
    targets = unit_graph.successors[unit_graph.index[v]]
    goal = unit_graph.vertex_of("g", "q1", (F(3, 4),))
    assert unit_graph.index[goal] in targets


def test_classification_on_unit_deadline(unit_graph):
    classes = classify(unit_graph)
    assert classes[unit_graph.vertex_of("s", "q0", (F(0),))] == ALIVE
    assert classes[unit_graph.vertex_of("s", "q0", (F(1),))] == DEAD
    assert classes[unit_graph.vertex_of("s", "q0", (F(2),))] == DEAD
    assert classes[unit_graph.vertex_of("s", "q1", (F(0),))] == FINAL
    assert classes[unit_graph.vertex_of("g", "q0", (F(0),))] == DEAD


def test_final_class_everywhere_final(exposure_graph):
    classes = exposure_graph.classes()
    for i, v in enumerate(exposure_graph.vertices):
        if v.location in exposure_graph.dta.final:
            assert classes[i] == FINAL
        else:
            assert classes[i] in (ALIVE, DEAD)


def test_contraction_constant_unit_deadline(unit_graph, unit_deadline):
    k = model_constants(*unit_deadline)
    c, m_min = contraction_constant(unit_graph, k)
    assert m_min == 2 * 24 * 24 + 1 == 1153
    assert abs(c - math.exp(-1) / 1153) <= 1e-12 * c


def test_contraction_threshold_scales_with_squared_vertices(exposure_graph,
                                                            exposure_window):
    k = model_constants(*exposure_window)
    c, m_min = contraction_constant(exposure_graph, k)
    n = exposure_graph.vertex_count
    assert n == 216
    assert m_min == 2 * n * n + 1
    expected = math.exp(-3.0) * (1.0 / 3.0) * float(F(1) / (2 * n * n + 1))
    assert abs(c - expected) <= 1e-12 * expected


def test_dead_vertices_have_no_alive_successors(exposure_graph):
    classes = exposure_graph.classes()
    for i, targets in enumerate(exposure_graph.successors):
        if classes[i] == DEAD:
            for j in targets:
                assert classes[j] == DEAD


def test_edge_witnesses_replay(exposure_graph):
    """Each stored (valuation, delay) witness reproduces its edge."""
    graph = exposure_graph
    chain, dta = graph.ctmc, graph.dta
    for (i, j), (eta, t) in graph.witnesses.items():
        source, target = graph.vertices[i], graph.vertices[j]
        assert region_of(eta, dta.ceilings) == source.region
        assert not region_of(
            tuple(v + t for v in eta), dta.ceilings
        ).is_marginal()
        si = chain.state_index(source.state)
        assert chain.transition[si][chain.state_index(target.state)] > 0
        after = kappa(dta, Configuration(source.location, eta),
                      chain.labeling[si], t)
        assert after.location == target.location
        assert region_of(after.valuation, dta.ceilings) == target.region


def test_every_edge_has_a_witness(unit_graph):
    for i, targets in enumerate(unit_graph.successors):
        for j in targets:
            assert (i, j) in unit_graph.witnesses


def test_monte_carlo_agrees_with_classification(exposure_window, exposure_graph):
    """Sampled sanity of the classes: alive non-final vertices accept with
    positive estimated probability, dead ones absorb immediately."""
    chain, dta = exposure_window
    classes = exposure_graph.classes()
    rng = np.random.default_rng(17)
    picks = {ALIVE: [], DEAD: []}
    order = rng.permutation(exposure_graph.vertex_count)
    for i in order:
        cls = classes[i]
        if cls in picks and len(picks[cls]) < 4:
            picks[cls].append(exposure_graph.vertices[i])
    from pathprob.regions import region_representative

    for vertex in picks[ALIVE]:
        eta = region_representative(vertex.region, dta.ceilings)
        est = mc.estimate(
            chain, dta, exposure_graph, vertex.state, vertex.location,
            [float(v) for v in eta], n=3000, seed=19,
        )
        assert est.p_hat > 0, vertex
        # positive at high confidence: the lower CI end stays above zero
        assert est.p_hat - est.halfwidth > 0, vertex
    for vertex in picks[DEAD]:
        eta = region_representative(vertex.region, dta.ceilings)
        est = mc.estimate(
            chain, dta, exposure_graph, vertex.state, vertex.location,
            [float(v) for v in eta], n=500, seed=23,
        )
        assert est.p_hat == 0.0
        assert est.dead_absorbed == est.n
