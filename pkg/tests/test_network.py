from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tncompress.errors import InvalidNetworkError, SizeLimitError
from tncompress.families import (
    mps_template,
    random_template,
    three_vertex_edge_order,
    three_vertex_template,
)
from tncompress.network import (
    Edge,
    NetworkSpec,
    TemplateSpec,
    evaluate_operator,
    load_network,
    network_from_dict,
    network_to_dict,
    operator_rank,
    random_network,
    restrict_power_of_two,
    reverse_edges,
    save_network,
    template_to_dict,
    validate_network,
    validate_template,
)
from tncompress.tensor import Tensor, contract_pair


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def single_vertex(matrix):
    out_dim, in_dim = matrix.shape
    t = TemplateSpec(
        (("A", True), ("i", False), ("o", False)),
        (Edge("a", "i", "A", in_dim), Edge("b", "A", "o", out_dim)),
    )
    return NetworkSpec(t, {"A": Tensor(matrix)}, {"A": ("b", "a")})


class TestValidateTemplate:
    def test_three_vertex_template_is_valid(self):
        t = three_vertex_template()
        assert validate_template(t) == []
        assert sorted(e.dim for e in t.edges) == [2, 2, 2, 3, 4, 7]

    def test_empty_vertex_of_degree_two(self):
        t = TemplateSpec(
            (("A", True), ("B", True), ("x", False)),
            (Edge("e1", "x", "A", 2), Edge("e2", "x", "B", 2)),
        )
        problems = validate_template(t)
        assert len(problems) == 1 and "'x'" in problems[0]

    def test_both_orientations(self):
        t = TemplateSpec(
            (("A", True), ("B", True)),
            (Edge("e1", "A", "B", 2), Edge("e2", "B", "A", 2)),
        )
        problems = validate_template(t)
        assert any("orientation" in p for p in problems)

    def test_bad_dimension(self):
        t = TemplateSpec((("A", True), ("x", False)), (Edge("e", "x", "A", 0),))
        assert any("dimension" in p for p in validate_template(t))

    def test_unknown_vertex(self):
        t = TemplateSpec((("A", True),), (Edge("e", "A", "Z", 2),))
        assert any("'Z'" in p for p in validate_template(t))

    def test_empty_attached_to_empty(self):
        t = TemplateSpec((("x", False), ("y", False)), (Edge("e", "x", "y", 2),))
        problems = validate_template(t)
        assert any("not attached to a filled vertex" in p for p in problems)

    def test_self_loop_and_parallel_edges(self):
        t = TemplateSpec(
            (("A", True), ("B", True)),
            (Edge("e1", "A", "A", 2), Edge("e2", "A", "B", 2), Edge("e3", "A", "B", 3)),
        )
        problems = validate_template(t)
        assert any("self-loop" in p for p in problems)
        assert any("appear 2 times" in p for p in problems)

    def test_duplicate_ids(self):
        t = TemplateSpec(
            (("A", True), ("A", True), ("x", False)),
            (Edge("e", "x", "A", 2), Edge("e", "A", "A", 2)),
        )
        problems = validate_template(t)
        assert any("declared 2 times" in p for p in problems)
        assert any("edge id 'e'" in p for p in problems)


class TestEvaluateOperator:
    def test_three_vertex_against_loop(self):
        rng = np.random.default_rng(0)
        t = three_vertex_template()
        t1, t2, t3 = crandn(rng, 4, 2, 2), crandn(rng, 2, 2, 3), crandn(rng, 2, 3, 7)
        net = NetworkSpec(t, {"1": Tensor(t1), "2": Tensor(t2), "3": Tensor(t3)}, three_vertex_edge_order())
        op = evaluate_operator(net)
        assert [e.id for e in op.in_edges] == ["i", "j"]
        assert [e.id for e in op.out_edges] == ["k"]
        expected = np.zeros((7, 8), dtype=complex)
        for i, j, l, m, n, k in itertools.product(range(4), range(2), range(2), range(2), range(3), range(7)):
            expected[k, i * 2 + j] += t1[i, l, m] * t2[j, l, n] * t3[m, n, k]
        np.testing.assert_allclose(op.matrix.data, expected, atol=1e-12)

    def test_single_vertex(self):
        a = crandn(np.random.default_rng(1), 3, 2)
        op = evaluate_operator(single_vertex(a))
        np.testing.assert_array_equal(op.matrix.data, a)

    def test_two_vertices_match_contract_pair(self):
        rng = np.random.default_rng(2)
        t = TemplateSpec(
            (("A", True), ("B", True), ("x", False), ("y", False)),
            (Edge("in", "x", "A", 2), Edge("mid", "A", "B", 3), Edge("out", "B", "y", 4)),
        )
        a, b = crandn(rng, 2, 3), crandn(rng, 3, 4)
        net = NetworkSpec(t, {"A": Tensor(a), "B": Tensor(b)}, {"A": ("in", "mid"), "B": ("mid", "out")})
        op = evaluate_operator(net)
        pair = contract_pair(Tensor(a), Tensor(b), [(1, 0)])
        np.testing.assert_allclose(op.matrix.data, pair.data.T, atol=1e-12)

    def test_no_filled_vertices(self):
        op = evaluate_operator(NetworkSpec(TemplateSpec((), ()), {}, {}))
        np.testing.assert_array_equal(op.matrix.data, [[1]])

    @pytest.mark.parametrize("seed", range(12))
    def test_order_independence(self, seed):
        rng = np.random.default_rng(seed)
        t = random_template(rng, int(rng.integers(2, 7)), dims=(1, 2, 3), max_open=1,
                            max_in_dim=64, max_out_dim=64)
        net = random_network(t, rng)
        greedy = evaluate_operator(net).matrix.data
        reverse = evaluate_operator(net, order=list(reversed(t.filled))).matrix.data
        assert np.linalg.norm(greedy - reverse) <= 1e-10 * np.linalg.norm(greedy)

    def test_size_limit(self):
        net = random_network(mps_template(4, 4, 2), np.random.default_rng(0))
        with pytest.raises(SizeLimitError):
            evaluate_operator(net, max_total_dim=100)

    def test_invalid_network(self):
        net = single_vertex(np.zeros((3, 2)))
        bad = NetworkSpec(net.template, net.tensors, {"A": ("a", "b")})
        assert validate_network(bad)
        with pytest.raises(InvalidNetworkError):
            evaluate_operator(bad)

    def test_missing_tensor(self):
        net = single_vertex(np.zeros((3, 2)))
        assert any("no tensor" in p for p in validate_network(NetworkSpec(net.template, {}, {})))


class TestOperatorRank:
    def test_identity(self):
        assert operator_rank(evaluate_operator(single_vertex(np.eye(4)))) == 4

    def test_outer_product(self):
        rng = np.random.default_rng(3)
        m = np.outer(crandn(rng, 5), crandn(rng, 3))
        assert operator_rank(evaluate_operator(single_vertex(m))) == 1

    @pytest.mark.parametrize("seed", range(5))
    def test_mps_pair_rank(self, seed):
        net = random_network(mps_template(2, 2, 2), np.random.default_rng(seed))
        assert operator_rank(evaluate_operator(net)) == 4

    def test_extent_limit(self):
        with pytest.raises(SizeLimitError):
            operator_rank(evaluate_operator(single_vertex(np.eye(8))), max_svd_extent=4)


class TestRestrictPowerOfTwo:
    def test_three_vertex_dims(self):
        t = restrict_power_of_two(three_vertex_template())
        by_id = {e.id: e.dim for e in t.edges}
        assert [by_id[k] for k in "ijlmnk"] == [4, 2, 2, 2, 2, 4]

    def test_fixed_point(self):
        t = mps_template(3, 4, 2)
        assert restrict_power_of_two(t) == t

    def test_dim_one(self):
        t = TemplateSpec((("A", True), ("x", False)), (Edge("e", "x", "A", 1),))
        assert restrict_power_of_two(t).edges[0].dim == 1

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(1, 10**6), min_size=1, max_size=8))
    def test_monotone_and_idempotent(self, dims):
        vertices = [("A", True)] + [(f"x{k}", False) for k in range(len(dims))]
        edges = [Edge(f"e{k}", f"x{k}", "A", d) for k, d in enumerate(dims)]
        t = TemplateSpec(tuple(vertices), tuple(edges))
        r = restrict_power_of_two(t)
        for before, after in zip(t.edges, r.edges):
            assert after.dim <= before.dim < 2 * after.dim
            assert after.dim & (after.dim - 1) == 0
        assert restrict_power_of_two(r) == r


class TestReverseEdges:
    def test_flip(self):
        t = reverse_edges(mps_template(2, 2, 2), ["p002"])
        e = t.edge("p002")
        assert (e.tail, e.head) == ("o002", "A002")
        assert [x.id for x in t.in_edges()] == ["L", "R", "p002"]

    def test_unknown(self):
        with pytest.raises(KeyError):
            reverse_edges(mps_template(2, 2, 2), ["nope"])


class TestNetworkFile:
    def test_template_round_trip(self, tmp_path):
        t = three_vertex_template()
        save_network(t, tmp_path / "t.json")
        assert load_network(tmp_path / "t.json") == t

    def test_network_round_trip(self, tmp_path):
        net = random_network(three_vertex_template(), np.random.default_rng(4))
        save_network(net, tmp_path / "n.json")
        back = load_network(tmp_path / "n.json")
        assert isinstance(back, NetworkSpec)
        for v in net.tensors:
            assert back.tensors[v].data.tobytes() == net.tensors[v].data.tobytes()
            assert back.edge_order[v] == net.edge_order[v]

    def test_partial_tensors_rejected(self):
        record = network_to_dict(random_network(three_vertex_template(), np.random.default_rng(5)))
        del record["vertices"][0]["tensor"]
        del record["vertices"][0]["edge_order"]
        with pytest.raises(ValueError):
            network_from_dict(record)

    def test_unknown_fields_rejected(self):
        record = template_to_dict(three_vertex_template())
        record["edges"][0]["weight"] = 1
        with pytest.raises(ValueError):
            network_from_dict(record)

    @pytest.mark.parametrize("record", [{"vertices": 3}, {"edges": "e"}, [1, 2]])
    def test_wrong_container_types(self, record):
        with pytest.raises(ValueError):
            network_from_dict(record)

    def test_tensor_without_order_rejected(self):
        record = network_to_dict(random_network(three_vertex_template(), np.random.default_rng(6)))
        del record["vertices"][0]["edge_order"]
        with pytest.raises(ValueError):
            network_from_dict(record)


def test_random_network_is_seeded():
    t = three_vertex_template()
    a = random_network(t, np.random.default_rng(9))
    b = random_network(t, np.random.default_rng(9))
    assert all(a.tensors[v].data.tobytes() == b.tensors[v].data.tobytes() for v in t.filled)
    assert math.prod(a.tensors["3"].shape) == 2 * 3 * 7
