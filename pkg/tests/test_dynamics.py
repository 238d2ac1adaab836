import json

import numpy as np
import pytest

from helpers import make_model
from laborscope.dynamics import (
    TopicAlignment,
    align,
    chain,
    cosine_similarity,
    write_alignment_json,
)
from laborscope.exceptions import ConfigError, DataError


class TestCosineSimilarity:

    def test_hand_value(self):
        assert cosine_similarity([1, 0], [1, 1]) == pytest.approx(1 / np.sqrt(2))

    def test_identical_vectors_are_exactly_one(self):
        u = np.array([0.1, 0.7, 0.3]) * 1.37  # awkward floats on purpose
        assert cosine_similarity(u, u.copy()) == 1.0

    def test_scaling_invariance(self):
        u = np.array([2.0, 3.0, 5.0])
        assert cosine_similarity(u, 17.0 * u) == 1.0 or \
            cosine_similarity(u, 17.0 * u) == pytest.approx(1.0, abs=1e-15)

    def test_nonnegative_inputs_stay_in_unit_interval(self, rng):
        for _ in range(50):
            u = rng.random(6)
            v = rng.random(6)
            s = cosine_similarity(u, v)
            assert 0.0 <= s <= 1.0

    def test_opposite_vectors(self):
        assert cosine_similarity([1.0, 0.0], [-1.0, 0.0]) == pytest.approx(-1.0)

    def test_zero_vector_rejected(self):
        with pytest.raises(DataError, match="zero vector"):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(DataError, match="mismatch"):
            cosine_similarity([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_nan_rejected(self):
        with pytest.raises(DataError):
            cosine_similarity([1.0, np.nan], [1.0, 2.0])


def permuted_pair():
    """Model B's topics are model A's under the permutation A1->B2,
    A2->B3, A3->B1; cross-topic cosines stay below 0.5."""
    h = np.array([[5.0, 1.0, 0.0, 0.0],
                  [0.0, 4.0, 1.0, 0.0],
                  [0.0, 0.0, 3.0, 2.0]])
    a = make_model(np.ones((2, 3)), h, year=2014)
    b = make_model(np.ones((2, 3)), h[[2, 0, 1]], year=2015)
    return a, b


class TestAlign:

    def test_recovers_permutation_with_exact_similarities(self):
        a, b = permuted_pair()
        out = align(a, b, alpha=0.5)
        assert out.order_maps[0] == ((1, 2), (2, 3), (3, 1))
        assert len(out.edges) == 3
        for _, _, _, _, sim in out.edges:
            assert sim == 1.0

    def test_years_come_from_models(self):
        a, b = permuted_pair()
        out = align(a, b)
        assert out.year_pairs == ((2014, 2015),)

    def test_positional_years_when_unlabeled(self):
        a, b = permuted_pair()
        a2 = make_model(a.w, a.h)
        b2 = make_model(b.w, b.h)
        assert align(a2, b2).year_pairs == ((0, 1),)

    def test_threshold_is_strict(self):
        a = make_model(np.ones((1, 1)), np.array([[1.0, 0.0]]))
        b = make_model(np.ones((1, 1)), np.array([[1.0, 1.0]]))
        sim = cosine_similarity(a.h[0], b.h[0])
        assert align(a, b, alpha=sim).edges == ()
        assert len(align(a, b, alpha=sim - 1e-9).edges) == 1

    def test_raising_alpha_never_adds_edges(self):
        a, b = permuted_pair()
        loose = {e[:4] for e in align(a, b, alpha=0.0).edges}
        tight = {e[:4] for e in align(a, b, alpha=0.9).edges}
        assert tight <= loose

    def test_zero_topic_rows_link_nothing(self):
        a = make_model(np.ones((1, 2)), np.array([[1.0, 0.0], [0.0, 0.0]]))
        b = make_model(np.ones((1, 2)), np.array([[1.0, 0.0], [0.0, 1.0]]))
        out = align(a, b, alpha=0.5)
        assert all(ta != 2 for _, ta, _, _, _ in out.edges)
        assert out.order_maps[0] == ((1, 1),)

    def test_greedy_and_hungarian_can_differ(self):
        # the strongest single edge blocks a better total assignment
        deg = np.radians([57.6, 1.8, 31.8, 89.4])
        a = make_model(np.ones((1, 2)),
                       np.array([[np.cos(deg[0]), np.sin(deg[0])],
                                 [np.cos(deg[1]), np.sin(deg[1])]]))
        b = make_model(np.ones((1, 2)),
                       np.array([[np.cos(deg[2]), np.sin(deg[2])],
                                 [np.cos(deg[3]), np.sin(deg[3])]]))
        greedy = align(a, b, alpha=0.0, method="greedy").order_maps[0]
        optimal = align(a, b, alpha=0.0, method="hungarian").order_maps[0]
        assert greedy == ((1, 1), (2, 2))
        assert optimal == ((1, 2), (2, 1))

    def test_alpha_out_of_range(self):
        a, b = permuted_pair()
        with pytest.raises(ConfigError, match="alpha"):
            align(a, b, alpha=1.5)

    def test_unknown_method(self):
        a, b = permuted_pair()
        with pytest.raises(ConfigError, match="method"):
            align(a, b, method="exact")

    def test_disjoint_occupations_rejected(self):
        a, _ = permuted_pair()
        w = np.ones((2, 1))
        h = np.array([[1.0, 0.0, 0.0]])
        from laborscope.factorization import TopicModel
        b = TopicModel(w=w, h=h, k=1, region_labels=("R00", "R01"),
                       occupation_labels=("X00", "X01", "X02"),
                       objective_trace=(1.0,), solver="hals")
        with pytest.raises(DataError, match="symmetric difference"):
            align(a, b)

    def test_reordered_occupations_rejected(self):
        a, _ = permuted_pair()
        from laborscope.factorization import TopicModel
        b = TopicModel(w=a.w, h=a.h, k=3, region_labels=a.region_labels,
                       occupation_labels=("O01", "O00", "O02", "O03"),
                       objective_trace=(1.0,), solver="hals")
        with pytest.raises(DataError, match="order"):
            align(a, b)


def chain_models():
    r_a = np.array([1.0, 0.0, 0.0, 0.0])
    r_b = np.array([0.0, 1.0, 0.0, 0.0])
    r_c = np.array([0.0, 0.0, 1.0, 0.0])
    w = np.ones((2, 2))
    m0 = make_model(w, np.vstack([r_a, r_b]), year=2000)
    m1 = make_model(w, np.vstack([r_a, r_c]), year=2001)
    m2 = make_model(w, np.vstack([r_c, r_a]), year=2002)
    return m0, m1, m2


class TestChain:

    def test_persistent_new_and_vanished_topics(self):
        out = chain(list(chain_models()), alpha=0.5)
        assert out.year_pairs == ((2000, 2001), (2001, 2002))
        assert out.chains == (
            ((2000, 1), (2001, 1), (2002, 2)),  # carried through, permuted
            ((2000, 2),),                       # vanishes after 2000
            ((2001, 2), (2002, 1)),             # emerges in 2001 as id 3
        )

    def test_models_sorted_by_year(self):
        m0, m1, m2 = chain_models()
        assert chain([m2, m0, m1]).chains == chain([m0, m1, m2]).chains

    def test_positional_order_when_any_year_missing(self):
        m0, m1, _ = chain_models()
        m1u = make_model(m1.w, m1.h)
        out = chain([m1u, m0])
        assert out.year_pairs == ((0, 1),)

    def test_duplicate_years_rejected(self):
        m0, m1, _ = chain_models()
        dup = make_model(m1.w, m1.h, year=2000)
        with pytest.raises(DataError, match="duplicate"):
            chain([m0, dup])

    def test_needs_two_models(self):
        m0, _, _ = chain_models()
        with pytest.raises(ConfigError, match="at least 2"):
            chain([m0])

    def test_order_map_lookup(self):
        out = chain(list(chain_models()))
        assert out.order_map(2000, 2001) == {1: 1}
        assert out.order_map(2001, 2002) == {1: 2, 2: 1}
        with pytest.raises(DataError, match="no alignment"):
            out.order_map(2000, 2002)


class TestTopicAlignment:

    def test_subthreshold_edge_rejected(self):
        with pytest.raises(DataError, match="exceed"):
            TopicAlignment(((0, 1),), ((0, 1, 1, 1, 0.4),), 0.5, ((),), ())

    def test_noninjective_order_map_rejected(self):
        with pytest.raises(DataError, match="injective"):
            TopicAlignment(((0, 1),), (), 0.5, (((1, 1), (2, 1)),), ())

    def test_one_order_map_per_pair(self):
        with pytest.raises(DataError, match="order map"):
            TopicAlignment(((0, 1), (1, 2)), (), 0.5, ((),), ())


def test_alignment_json_structure(tmp_path):
    out = chain(list(chain_models()), alpha=0.5)
    path = tmp_path / "alignment.json"
    write_alignment_json(out, path, labels={(2000, 1): "first"})
    data = json.loads(path.read_text())
    assert data["alpha"] == 0.5
    assert data["years"] == [2000, 2001, 2002]
    assert data["nodes"][0] == {"year": 2000, "topic_id": 1, "label": "first"}
    assert all(e["similarity"] == 1.0 for e in data["edges"])
    assert data["order_maps"][1] == {"year_a": 2001, "year_b": 2002,
                                     "pairs": [[1, 2], [2, 1]]}
    assert len(data["chains"]) == 3
