import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmstp.instance import (
    Instance,
    InstanceError,
    ParseError,
    generate_esym,
    generate_euclidean,
    generate_family,
    generate_uniform,
    generate_vsym,
    load_instance,
    max_euclidean_cost,
    save_instance,
)

from oracles import reachable_from_root

K4_TEXT = """\
QMSTP 4 6
# complete graph, linear costs only
1 2 1
1 3 2
1 4 3
2 3 4
2 4 5
3 4 6
""" + "0 0 0 0 0 0\n" * 6


def _off_diagonal(s):
    return s[~np.eye(len(s), dtype=bool)]


def _roundtrip(inst):
    buf = io.BytesIO()
    save_instance(inst, buf)
    buf.seek(0)
    return load_instance(buf)


def test_load_four_vertex_zero_quadratic():
    inst = load_instance(io.StringIO(K4_TEXT))
    assert inst.n == 4 and inst.m == 6
    assert inst.c.tolist() == [1, 2, 3, 4, 5, 6]
    assert inst.lambda_max == 0
    assert inst.edge_index[2, 3] == 5 and inst.edge_index[3, 2] == 5


def test_load_accepts_bytes_and_paths(tmp_path):
    path = tmp_path / "k4.qmstp"
    path.write_text(K4_TEXT)
    assert load_instance(path) == load_instance(io.BytesIO(K4_TEXT.encode()))


def test_asymmetric_matrix_rejected():
    lines = K4_TEXT.splitlines()
    lines[-6] = "0 7 0 0 0 0"
    with pytest.raises(InstanceError, match="asymmetric quadratic matrix"):
        load_instance(io.StringIO("\n".join(lines)))


@pytest.mark.parametrize(
    "edit, message",
    [
        (lambda ls: ls[:4] + ["1 2 9"] + ls[5:], "duplicate edge"),
        (lambda ls: ls[:2] + ["1 2 -1"] + ls[3:], "negative cost"),
        (lambda ls: ls[:2] + ["2 1 1"] + ls[3:], "u < v"),
        (lambda ls: ls[:2] + ["1 2 x"] + ls[3:], "line 3"),
        (lambda ls: ls[:-1] + ["0 0 0"], "matrix row needs 6"),
        (lambda ls: ["QMSTX 4 6"] + ls[1:], "header"),
    ],
)
def test_malformed_files(edit, message):
    lines = edit(K4_TEXT.splitlines())
    with pytest.raises(InstanceError, match=message):
        load_instance(io.StringIO("\n".join(lines)))


def test_parse_error_carries_line_number():
    lines = K4_TEXT.splitlines()
    lines[4] = "2 3"
    with pytest.raises(ParseError) as info:
        load_instance(io.StringIO("\n".join(lines)))
    assert info.value.line == 5


def test_disconnected_graph_rejected():
    text = "QMSTP 4 3\n1 2 1\n1 3 1\n2 3 1\n" + "0 0 0\n" * 3
    with pytest.raises(InstanceError, match="edge count|disconnected"):
        load_instance(io.StringIO(text))
    # four edges, vertex 4 still isolated
    edges = [(0, 1), (0, 2), (1, 2)]
    with pytest.raises(InstanceError, match="disconnected"):
        Instance(5, edges + [(0, 3)], [1] * 4, np.zeros((4, 4), int))


def test_trivial_instance_file_has_three_lines():
    inst = Instance(2, [(0, 1)], [7], [[0]])
    buf = io.StringIO()
    save_instance(inst, buf)
    assert buf.getvalue() == "QMSTP 2 1\n1 2 7\n0\n"


def test_save_is_deterministic():
    inst = generate_family("cp", 10, 3, density=0.67)
    a, b = io.BytesIO(), io.BytesIO()
    save_instance(inst, a)
    save_instance(inst, b)
    assert a.getvalue() == b.getvalue()


def test_roundtrip_ss_and_cp():
    for inst in (generate_family("ss", 25, 1), generate_family("cp", 10, 4, density=0.33)):
        back = _roundtrip(inst)
        assert back == inst
        assert back.lambda_max == inst.lambda_max
        assert back.edges.tolist() == inst.edges.tolist()


def test_uniform_complete_ranges():
    inst = generate_uniform(25, 1.0, (1, 100), (1, 20), seed=7)
    assert inst.m == 300
    assert inst.c.min() >= 1 and inst.c.max() <= 100
    off = _off_diagonal(inst.s)
    assert off.min() >= 2 and off.max() <= 40
    assert (off % 2 == 0).all()


def test_uniform_degenerate_ranges():
    inst = generate_uniform(10, 1.0, (5, 5), (3, 3), seed=1)
    assert (inst.c == 5).all()
    assert (_off_diagonal(inst.s) == 6).all()
    assert inst.lambda_max == 6


def test_uniform_partial_density_is_connected():
    inst = generate_uniform(50, 0.33, (1, 10), (1, 10), seed=11)
    assert inst.m == round(0.33 * 1225) == 404
    assert reachable_from_root(inst) == 50


def test_uniform_density_too_low():
    with pytest.raises(ValueError, match="fewer than"):
        generate_uniform(20, 0.05, (1, 10), (1, 10), seed=0)


def test_euclidean_two_vertices():
    inst = generate_euclidean(2, 500, (0, 0), seed=5)
    (a, b) = inst.vertex_data
    assert inst.m == 1
    assert inst.c[0] == math.floor(math.dist(a, b) + 0.5)
    assert inst.s.tolist() == [[0]]


def test_euclidean_triangle_inequality_with_rounding_slack():
    inst = generate_euclidean(20, 500, (0, 20), seed=9)
    cost = lambda u, v: int(inst.c[inst.edge_index[u, v]])  # noqa: E731
    for a in range(20):
        for b in range(20):
            for c in range(20):
                if len({a, b, c}) == 3:
                    assert cost(a, c) <= cost(a, b) + cost(b, c) + 1


def test_euclidean_determinism_and_bounds():
    a = generate_euclidean(30, 500, (1, 20), seed=3)
    b = generate_euclidean(30, 500, (1, 20), seed=3)
    assert a == b
    assert np.array_equal(a.vertex_data, b.vertex_data)
    assert a.c.max() <= max_euclidean_cost(500)
    assert generate_euclidean(30, 500, (1, 20), seed=4) != a


def test_vsym_unit_weights():
    inst = generate_vsym(6, seed=0, weights=[1] * 6)
    assert (_off_diagonal(inst.s) == 2).all()
    assert np.array_equal(inst.s, inst.s.T)


def test_vsym_matches_stored_weights():
    inst = generate_vsym(6, seed=3)
    w = inst.vertex_data
    assert w.min() >= 1 and w.max() <= 10
    assert inst.c.min() >= 1 and inst.c.max() <= 10000
    rng = np.random.default_rng(0)
    for _ in range(20):
        e, f = rng.choice(inst.m, size=2, replace=False)
        (a, b), (c, d) = inst.edges[e], inst.edges[f]
        assert inst.s[e, f] == 2 * w[a] * w[b] * w[c] * w[d]


def test_esym_midpoint_bound():
    inst = generate_esym(10, 100, seed=2)
    assert (np.diagonal(inst.s) == 0).all()
    for e in range(inst.m):
        for f in range(inst.m):
            if e != f and set(inst.edges[e].tolist()) & set(inst.edges[f].tolist()):
                q = inst.s[e, f] // 2
                assert q <= (inst.c[e] + inst.c[f]) / 2 + 1
    assert generate_esym(10, 100, seed=2) == inst


def test_family_dispatch():
    assert generate_family("ss", 25, 1).m == 300
    sca = generate_family("sca", 12, 2)
    assert _off_diagonal(sca.s).max() <= 40
    soak = generate_family("soak", 12, 2)
    assert _off_diagonal(soak.s).min() >= 2
    with pytest.raises(ValueError, match="unknown family"):
        generate_family("nug", 5, 0)


def test_instance_is_read_only():
    inst = generate_family("ss", 5, 0)
    with pytest.raises(ValueError):
        inst.s[0, 1] = 3


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(2, 14),
    density=st.floats(0.2, 1.0),
    seed=st.integers(0, 2**64 - 1),
)
def test_generator_properties(n, density, seed):
    total = n * (n - 1) // 2
    if math.floor(density * total + 0.5) < n - 1:
        density = 1.0
    inst = generate_uniform(n, density, (0, 9), (0, 5), seed)
    again = generate_uniform(n, density, (0, 9), (0, 5), seed)
    assert inst == again
    assert reachable_from_root(inst) == n
    brute = max((int(inst.s[e, f]) for e in range(inst.m) for f in range(inst.m) if e != f), default=0)
    assert inst.lambda_max == brute
    assert _roundtrip(inst) == inst
