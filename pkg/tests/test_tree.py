import collections

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmstp._rng import make_rng
from qmstp.instance import Instance, generate_uniform
from qmstp.tree import (
    SpanningTree,
    apply_swap_edge,
    apply_swap_vertex,
    build_contributions,
    check_state,
    cycle_path,
    degree_one_vertices,
    edge_swap_table,
    gain_swap_edge,
    gain_swap_vertex,
    gamma,
    objective,
    random_spanning_tree,
    swap_vertex_edges,
    vertex_swap_table,
)

from oracles import degree_one, literal_objective, swap_edge_moves, swap_vertex_moves, tree_edge_set


def complete(n, c=None, s_const=0):
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    m = len(edges)
    c = list(range(1, m + 1)) if c is None else c
    s = np.full((m, m), s_const, dtype=np.int64)
    np.fill_diagonal(s, 0)
    return Instance(n, edges, c, s)


def tree_of(inst, pairs):
    return SpanningTree(inst, [inst.edge_index[u, v] for u, v in pairs])


def random_case(seed, n_range=(4, 12)):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(*n_range, endpoint=True))
    density = float(rng.choice([0.5, 0.75, 1.0]))
    if round(density * n * (n - 1) / 2) < n - 1:
        density = 1.0
    inst = generate_uniform(n, density, (0, 30), (0, 15), seed)
    return inst, random_spanning_tree(inst, make_rng(seed, "solver"))


def test_two_vertex_tree():
    inst = Instance(2, [(0, 1)], [9], [[0]])
    t = random_spanning_tree(inst, make_rng(0, "solver"))
    d = build_contributions(inst, t)
    assert t.objective == 9
    assert gamma(t, d) == 9
    assert degree_one_vertices(t) == [(0, 1), (1, 0)]
    assert vertex_swap_table(inst, t, d)[0].size == 0


def test_zero_quadratic_objective_and_contributions():
    inst = complete(4)
    t = random_spanning_tree(inst, make_rng(3, "solver"))
    assert t.objective == int(inst.c[t.edge_ids()].sum())
    d = build_contributions(inst, t)
    assert np.array_equal(d, inst.c)


def test_objective_with_constant_quadratic():
    # edges 0,1,2 = {1,2},{1,3},{1,4}: the star
    zero = complete(4)
    two = complete(4, s_const=2)
    assert objective(zero, tree_of(zero, [(0, 1), (0, 2), (0, 3)])) == 6
    assert objective(two, tree_of(two, [(0, 1), (0, 2), (0, 3)])) == 12
    assert gamma(tree_of(zero, [(0, 1), (0, 2), (0, 3)]), zero.c.astype(np.int64)) == 3


def test_contribution_identity():
    for seed in range(10):
        inst, t = random_case(seed)
        d = build_contributions(inst, t)
        x = t.edge_ids()
        twice = int(inst.c[x].sum() + d[x].sum())
        assert twice % 2 == 0 and twice // 2 == t.objective


def test_objective_matches_literal_double_sum():
    for seed in range(10):
        inst, t = random_case(seed, (8, 8))
        assert t.objective == objective(inst, t) == literal_objective(inst, tree_edge_set(t))


def test_contributions_match_naive_loop():
    inst, t = random_case(5, (8, 8))
    d = build_contributions(inst, t)
    x = tree_edge_set(t)
    for g in range(inst.m):
        assert d[g] == inst.c[g] + sum(int(inst.s[g, h]) for h in x)


def test_cycle_path_star_and_path():
    inst = complete(4)
    star = tree_of(inst, [(0, 1), (0, 2), (0, 3)])
    assert cycle_path(inst, star, inst.edge_index[1, 2]) == [inst.edge_index[0, 1], inst.edge_index[0, 2]]
    path = tree_of(inst, [(0, 1), (1, 2), (2, 3)])
    assert sorted(cycle_path(inst, path, inst.edge_index[0, 3])) == sorted(path.edge_ids().tolist())
    with pytest.raises(ValueError):
        cycle_path(inst, path, inst.edge_index[0, 1])


def test_cycle_path_closes_one_cycle():
    for seed in range(15):
        inst, t = random_case(seed, (10, 10))
        outside = np.flatnonzero(~t.in_tree)
        if outside.size == 0:
            continue
        e = int(outside[seed % outside.size])
        cyc = cycle_path(inst, t, e) + [e]
        deg = collections.Counter(inst.edges[cyc].ravel().tolist())
        assert set(deg.values()) == {2}
        assert len(deg) == len(cyc)
        # N1 legal leaving edges are exactly the cycle edges
        legal = {f for e2, f, _ in swap_edge_moves(inst, tree_edge_set(t)) if e2 == e}
        assert legal == set(cyc) - {e}


def test_gain_swap_edge_zero_quadratic():
    inst = complete(4, c=[1, 2, 3, 4, 5, 6])
    d = inst.c.astype(np.int64)
    assert gain_swap_edge(inst, d, 3, 0) == 3
    assert gain_swap_edge(inst, d, 3, 3) == 0


def test_swap_edge_exact_and_involution():
    for seed in range(20):
        inst, t = random_case(seed)
        d = build_contributions(inst, t)
        moves = swap_edge_moves(inst, tree_edge_set(t))
        if not moves:
            continue
        e, f, new = moves[seed % len(moves)]
        before, d0 = t.copy(), d.copy()
        delta = apply_swap_edge(inst, t, d, e, f)
        assert delta == literal_objective(inst, new) - literal_objective(inst, tree_edge_set(before))
        assert tree_edge_set(t) == new
        assert check_state(inst, t, d) == []
        apply_swap_edge(inst, t, d, f, e)
        assert t == before
        assert np.array_equal(d, d0)


def test_apply_rejects_non_crossing_edge():
    inst = complete(4)
    path = tree_of(inst, [(0, 1), (1, 2), (2, 3)])
    d = build_contributions(inst, path)
    with pytest.raises(ValueError):
        apply_swap_edge(inst, path, d, inst.edge_index[0, 2], inst.edge_index[2, 3])


def test_degree_one_star_and_path():
    inst = complete(5)
    star = tree_of(inst, [(0, k) for k in range(1, 5)])
    assert degree_one_vertices(star) == [(k, 0) for k in range(1, 5)]
    inst4 = complete(4)
    path = tree_of(inst4, [(0, 1), (1, 2), (2, 3)])
    assert degree_one_vertices(path) == [(0, 1), (3, 2)]


def test_degree_one_matches_recount():
    inst, t = random_case(7, (12, 12))
    assert dict(degree_one_vertices(t)) == degree_one(inst, tree_edge_set(t))


def test_swap_vertex_zero_quadratic_and_symmetric():
    inst = complete(4, c=[1, 2, 3, 4, 5, 6])
    path = tree_of(inst, [(0, 1), (1, 2), (2, 3)])
    d = build_contributions(inst, path)
    e1, e2, f1, f2 = swap_vertex_edges(inst, path, 0, 3)
    expect = sum(int(inst.c[e]) for e in (e1, e2)) - sum(int(inst.c[f]) for f in (f1, f2))
    assert gain_swap_vertex(inst, path, d, 0, 3) == expect
    flat = complete(4, c=[5] * 6, s_const=4)
    path = tree_of(flat, [(0, 1), (1, 2), (2, 3)])
    assert gain_swap_vertex(flat, path, build_contributions(flat, path), 0, 3) == 0


def test_swap_vertex_preconditions():
    inst = complete(5)
    star = tree_of(inst, [(0, k) for k in range(1, 5)])
    with pytest.raises(ValueError, match="share"):
        swap_vertex_edges(inst, star, 1, 2)
    with pytest.raises(ValueError, match="degree-one"):
        swap_vertex_edges(inst, star, 0, 2)


def test_swap_vertex_exact_and_involution():
    hits = 0
    for seed in range(40):
        inst, t = random_case(seed, (5, 12))
        moves = swap_vertex_moves(inst, tree_edge_set(t))
        if not moves:
            continue
        hits += 1
        d = build_contributions(inst, t)
        i, j, new = moves[seed % len(moves)]
        before, d0 = t.copy(), d.copy()
        delta = apply_swap_vertex(inst, t, d, i, j)
        assert delta == literal_objective(inst, new) - literal_objective(inst, tree_edge_set(before))
        assert check_state(inst, t, d) == []
        apply_swap_vertex(inst, t, d, i, j)
        assert tree_edge_set(t) == tree_edge_set(before)
        assert t.objective == before.objective
        assert np.array_equal(d, d0)
        assert check_state(inst, t, d) == []
    assert hits >= 20


def test_gamma_brute_scan():
    for seed in range(10):
        inst, t = random_case(seed)
        d = build_contributions(inst, t)
        assert gamma(t, d) == max(int(d[g]) for g in range(inst.m) if t.in_tree[g])


def test_random_tree_covers_all_three_triangle_trees():
    inst = complete(3)
    counts = collections.Counter(
        tuple(random_spanning_tree(inst, make_rng(seed, "solver")).edge_ids().tolist())
        for seed in range(10000)
    )
    assert set(counts) == {(0, 1), (0, 2), (1, 2)}
    # each tree is one of three equally likely outcomes
    assert all(abs(v - 10000 / 3) < 250 for v in counts.values())


def test_tree_text_roundtrip():
    inst, t = random_case(2, (9, 9))
    text = t.to_text()
    assert text.splitlines()[0] == f"TREE {inst.n} {t.objective}"
    assert SpanningTree.from_text(inst, text) == t


def test_tree_rejects_non_spanning_sets():
    inst = complete(4)
    with pytest.raises(ValueError):
        tree_of(inst, [(0, 1), (1, 2)])
    with pytest.raises(ValueError):
        tree_of(inst, [(0, 1), (1, 2), (0, 2)])


def test_vectorized_tables_match_scalar_gains():
    for seed in range(10):
        inst, t = random_case(seed)
        d = build_contributions(inst, t)
        entering = np.flatnonzero(~t.in_tree)
        leaving, gains, legal = edge_swap_table(inst, t, d, entering)
        table = {(int(entering[k]), int(leaving[r])): int(gains[r, k])
                 for r, k in zip(*np.nonzero(legal))}
        oracle = {(e, f) for e, f, _ in swap_edge_moves(inst, tree_edge_set(t))}
        assert set(table) == oracle
        for (e, f), g in table.items():
            assert g == gain_swap_edge(inst, d, e, f)
        i, j, *_, vg = vertex_swap_table(inst, t, d)
        pairs = {(int(a), int(b)): int(g) for a, b, g in zip(i, j, vg)}
        assert set(pairs) == {(a, b) for a, b, _ in swap_vertex_moves(inst, tree_edge_set(t))}
        for (a, b), g in pairs.items():
            assert g == gain_swap_vertex(inst, t, d, a, b)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), walk=st.lists(st.integers(0, 10**6), min_size=1, max_size=30))
def test_random_walk_keeps_state_consistent(seed, walk):
    inst, t = random_case(seed, (4, 10))
    d = build_contributions(inst, t)
    for pick in walk:
        edge_moves = np.argwhere(edge_swap_table(inst, t, d, np.flatnonzero(~t.in_tree))[2])
        vi, vj, *_ = vertex_swap_table(inst, t, d)
        total = len(edge_moves) + len(vi)
        if total == 0:
            break
        k = pick % total
        before = t.objective
        if k < len(edge_moves):
            r, col = edge_moves[k]
            e = int(np.flatnonzero(~t.in_tree)[col])
            f = int(t.parent_edge[np.flatnonzero(t.parent >= 0)[r]])
            delta = apply_swap_edge(inst, t, d, e, f)
        else:
            k -= len(edge_moves)
            delta = apply_swap_vertex(inst, t, d, int(vi[k]), int(vj[k]))
        assert t.parent[0] == -1
        assert t.objective == before + delta == literal_objective(inst, tree_edge_set(t))
    assert check_state(inst, t, d) == []
