import pytest

from fairy.datasets import TOY_SCHEMA
from fairy.errors import GraphError
from fairy.similarity import (EmbeddingSimilarity, TaxonomicSimilarity,
                              associated_categories, category_types,
                              load_embeddings, save_embeddings)

VECS = {
    "health": [1.0, 0.0],
    "chemistry": [0.0, 1.0],
    "organics": [1.0, 1.0],
}


def test_category_types_come_from_self_nesting_triples():
    assert category_types(TOY_SCHEMA) == frozenset({"category"})
    assert category_types(TOY_SCHEMA, taxonomy_edge="follows") == frozenset({"user"})


def test_associated_categories(toy):
    cats = frozenset({"category"}) and category_types(toy.schema)
    assert associated_categories(toy, "health", cats) == {"health"}
    assert associated_categories(toy, "alice", cats) == {"health"}
    assert associated_categories(toy, "bomb-post", cats) == {"chemistry", "organics"}
    assert associated_categories(toy, "bob", cats) == frozenset()


@pytest.fixture(scope="module")
def tax(toy):
    return TaxonomicSimilarity(toy)


@pytest.fixture(scope="module")
def emb(toy):
    return EmbeddingSimilarity(toy, VECS)


class TestTaxonomic:
    def test_identity(self, tax):
        assert tax.sim("health", "health") == 1.0
        assert tax.sim("sam", "sam") == 1.0  # even without categories

    def test_shared_category_scores_one(self, tax):
        assert tax.sim("health-post", "health") == 1.0
        assert tax.sim("alice", "health-post") == 1.0

    def test_one_hop_apart(self, tax):
        # food nests under organics
        assert tax.sim("food", "organics") == 0.5
        assert tax.sim("food-question", "bomb-post") == 0.5

    def test_nearest_pair_wins(self, tax):
        # bomb-post maps to both chemistry and organics; organics is nearer
        assert tax.taxonomy_distance("bomb-post", "food") == 1
        assert tax.sim("bomb-post", "organics") == 1.0

    def test_unrelated_categories_score_zero(self, tax):
        assert tax.sim("chemistry", "organics") == 0.0
        assert tax.sim("alice", "bomb-post") == 0.0

    def test_category_less_node_scores_zero(self, tax):
        assert tax.sim("bob", "health") == 0.0
        assert tax.sim("sam", "bob") == 0.0

    def test_symmetry(self, tax, toy):
        names = sorted(toy.nodes)
        for a in names:
            for b in names:
                assert tax.sim(a, b) == tax.sim(b, a)

    def test_unknown_node(self, tax):
        with pytest.raises(GraphError):
            tax.sim("nobody", "nobody")


class TestEmbedding:
    def test_identity(self, emb):
        assert emb.sim("health", "health") == 1.0

    def test_orthogonal_vectors_score_half(self, emb):
        assert emb.sim("health", "chemistry") == pytest.approx(0.5)

    def test_node_borrows_category_vector(self, emb):
        assert emb.sim("health-post", "health") == pytest.approx(1.0)

    def test_mean_of_categories(self, emb):
        # bomb-post -> mean([0,1],[1,1]) = [0.5,1]; cos with chemistry [0,1]
        want = (1.0 / (1.25 ** 0.5) + 1.0) / 2.0
        assert emb.sim("bomb-post", "chemistry") == pytest.approx(want)

    def test_opposite_vectors_score_zero(self, toy):
        e = EmbeddingSimilarity(toy, {"health": [1.0, 0.0], "chemistry": [-1.0, 0.0]})
        assert e.sim("health", "chemistry") == pytest.approx(0.0)

    def test_zero_vector_scores_zero(self, toy):
        e = EmbeddingSimilarity(toy, {"health": [0.0, 0.0], "chemistry": [1.0, 0.0]})
        assert e.sim("health", "chemistry") == 0.0

    def test_missing_vector_without_fallback(self, emb):
        assert emb.sim("sam", "health") == 0.0
        assert emb.sim("food-question", "organics") == 0.0  # food has no vector

    def test_missing_vector_uses_fallback(self, toy):
        e = EmbeddingSimilarity(toy, VECS, fallback=TaxonomicSimilarity(toy))
        assert e.sim("food-question", "organics") == 0.5

    def test_mixed_dimensions_rejected(self, toy):
        with pytest.raises(GraphError, match="dimension"):
            EmbeddingSimilarity(toy, {"health": [1.0], "chemistry": [1.0, 0.0]})

    def test_symmetry(self, emb, toy):
        names = sorted(toy.nodes)
        for a in names:
            for b in names:
                assert emb.sim(a, b) == pytest.approx(emb.sim(b, a))


def test_embedding_file_round_trip(tmp_path):
    file = tmp_path / "vecs.jsonl"
    save_embeddings(VECS, file)
    assert load_embeddings(file) == VECS


def test_duplicate_embedding_rejected(tmp_path):
    file = tmp_path / "vecs.jsonl"
    file.write_text('{"id": "a", "vector": [1]}\n{"id": "a", "vector": [2]}\n')
    with pytest.raises(GraphError, match="duplicate"):
        load_embeddings(file)
