import math
import random

import numpy as np
import pytest

import oracles
import synth
from answersim.corpus import Dataset, EvalRecord, PartitionKey
from answersim.embmetrics import (
    BertScoreTriple,
    IdfTable,
    SentenceEmbedding,
    TokenEmbeddingSet,
    bert_score,
    bi_encoder_score,
    build_idf,
    cosine,
    layer_sweep,
)
from answersim.errors import (
    DimensionMismatch,
    EmptyCorpus,
    LayerMismatch,
    MissingEmbedding,
    MissingLayer,
    ModelMismatch,
    ZeroVector,
)
from answersim.rankstats import CorrelationTriple

E1 = [1.0, 0.0, 0.0]
E2 = [0.0, 1.0, 0.0]


def token_set(text_id, tokens, vectors, model="m", layer=0):
    return TokenEmbeddingSet(
        text_id=text_id, model_id=model, layer=layer,
        tokens=tuple(tokens), vectors=np.asarray(vectors, dtype=np.float64),
    )


class TestCosine:
    def test_identical_unit_vectors(self):
        assert cosine(E1, E1) == 1.0

    def test_orthogonal(self):
        assert cosine(E1, E2) == 0.0

    def test_half_turn(self):
        assert cosine([1.0, 1.0], [1.0, 0.0]) == pytest.approx(1 / math.sqrt(2), abs=1e-9)

    def test_opposite(self):
        assert cosine([2.0, -1.0], [-2.0, 1.0]) == pytest.approx(-1.0, abs=1e-12)
        assert cosine([2.0, -1.0], [-2.0, 1.0]) >= -1.0  # clamp holds

    def test_clamped_to_unit_interval(self):
        rng = random.Random(3)
        for _ in range(200):
            u = [rng.uniform(-1, 1) for _ in range(4)]
            v = [rng.uniform(-1, 1) for _ in range(4)]
            if not any(u) or not any(v):
                continue
            assert -1.0 <= cosine(u, v) <= 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine([1.0, 0.0], [1.0, 0.0, 0.0])

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            cosine([0.0, 0.0], [1.0, 0.0])


class TestTokenEmbeddingSet:
    def test_token_vector_count_must_agree(self):
        with pytest.raises(DimensionMismatch):
            token_set("t", ["one", "two"], [E1])

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            token_set("t", ["one"], [[0.0, 0.0, 0.0]])

    def test_vectors_are_read_only(self):
        emb = token_set("t", ["one"], [E1])
        with pytest.raises(ValueError):
            emb.vectors[0, 0] = 5.0


class TestIdf:
    def test_ubiquitous_token_weighs_zero(self):
        table = build_idf([["the", "cat"], ["the", "dog"], ["the", "fox"]])
        assert table.weight("the") == pytest.approx(math.log(4 / 4), abs=1e-12)

    def test_unseen_token_gets_full_weight(self):
        table = build_idf([["a"], ["b"], ["c"]])
        assert table.weight("zzz") == pytest.approx(math.log(4), abs=1e-12)

    def test_single_document_frequency(self):
        table = build_idf([["rare", "x"], ["x"], ["x"]])
        assert table.weight("rare") == pytest.approx(math.log(2), abs=1e-12)

    def test_weights_nonnegative(self):
        table = build_idf([["a", "b"], ["b", "c"], ["c", "a"]])
        assert all(w >= 0 for w in table.weights.values())

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpus):
            build_idf([])

    def test_duplicate_tokens_in_one_doc_count_once(self):
        table = build_idf([["x", "x", "x"], ["y"]])
        assert table.weight("x") == pytest.approx(math.log(3 / 2), abs=1e-12)


class TestBertScore:
    def test_identical_sets(self):
        ref = token_set("a", ["u", "v"], [E1, E2])
        cand = token_set("b", ["u", "v"], [E1, E2])
        triple = bert_score(ref, cand)
        assert (triple.precision, triple.recall, triple.f1) == (1.0, 1.0, 1.0)

    def test_fully_orthogonal_sets(self):
        ref = token_set("a", ["u"], [[1.0, 0.0, 0.0, 0.0]])
        cand = token_set("b", ["w"], [[0.0, 0.0, 1.0, 0.0]])
        triple = bert_score(ref, cand)
        assert (triple.precision, triple.recall, triple.f1) == (0.0, 0.0, 0.0)

    def test_mixed_pair_hand_computed(self):
        half = 1 / math.sqrt(2)
        ref = token_set("a", ["a", "b"], [E1, E2])
        cand = token_set("b", ["a", "c"], [E1, [half, half, 0.0]])
        triple = bert_score(ref, cand)
        expected = (1 + half) / 2
        assert triple.recall == pytest.approx(expected, abs=1e-4)
        assert triple.precision == pytest.approx(expected, abs=1e-4)
        assert triple.f1 == pytest.approx(0.8536, abs=1e-4)

    def test_matches_explicit_max_loops_on_random_fixtures(self):
        rng = random.Random(99)
        for _ in range(200):
            n_ref, n_cand, dim = rng.randint(1, 6), rng.randint(1, 6), rng.randint(2, 5)
            ref_vecs = [[rng.uniform(-1, 1) + 0.01 for _ in range(dim)] for _ in range(n_ref)]
            cand_vecs = [[rng.uniform(-1, 1) + 0.01 for _ in range(dim)] for _ in range(n_cand)]
            ref_toks = [rng.choice("pqrs") for _ in range(n_ref)]
            cand_toks = [rng.choice("pqrs") for _ in range(n_cand)]
            use_idf = rng.random() < 0.5
            idf = None
            idf_weight = None
            if use_idf:
                idf = build_idf([ref_toks, cand_toks, ["p"]])
                idf_weight = idf.weight
            got = bert_score(token_set("a", ref_toks, ref_vecs), token_set("b", cand_toks, cand_vecs), idf)
            exp_p, exp_r, exp_f = oracles.bert_score_definition(
                ref_toks, ref_vecs, cand_toks, cand_vecs, idf_weight
            )
            assert got.precision == pytest.approx(exp_p, abs=1e-9)
            assert got.recall == pytest.approx(exp_r, abs=1e-9)
            assert got.f1 == pytest.approx(exp_f, abs=1e-9)

    def test_f1_symmetric_without_idf(self):
        rng = random.Random(123)
        for _ in range(50):
            a = token_set("a", ["x"] * 3, [[rng.uniform(-1, 1) + 0.01 for _ in range(4)] for _ in range(3)])
            b = token_set("b", ["y"] * 2, [[rng.uniform(-1, 1) + 0.01 for _ in range(4)] for _ in range(2)])
            assert bert_score(a, b).f1 == bert_score(b, a).f1

    def test_swapping_arguments_swaps_precision_and_recall(self):
        rng = random.Random(124)
        for _ in range(50):
            a = token_set("a", ["x", "y"], [[rng.uniform(-1, 1) + 0.01 for _ in range(4)] for _ in range(2)])
            b = token_set("b", ["z"] * 3, [[rng.uniform(-1, 1) + 0.01 for _ in range(4)] for _ in range(3)])
            forward = bert_score(a, b)
            backward = bert_score(b, a)
            assert forward.precision == backward.recall
            assert forward.recall == backward.precision

    def test_duplicating_a_candidate_token_leaves_recall_unchanged(self):
        rng = random.Random(321)
        for _ in range(50):
            vecs = [[rng.uniform(-1, 1) + 0.01 for _ in range(3)] for _ in range(4)]
            ref = token_set("a", ["r", "s"], vecs[:2])
            cand = token_set("b", ["t", "u"], vecs[2:])
            dup = token_set("b", ["t", "u", "u"], vecs[2:] + [vecs[3]])
            assert bert_score(ref, dup).recall == bert_score(ref, cand).recall

    def test_model_mismatch(self):
        with pytest.raises(ModelMismatch):
            bert_score(token_set("a", ["x"], [E1], model="m1"), token_set("b", ["x"], [E1], model="m2"))

    def test_layer_mismatch(self):
        with pytest.raises(LayerMismatch):
            bert_score(token_set("a", ["x"], [E1], layer=2), token_set("b", ["x"], [E1], layer=12))

    def test_precision_recall_always_bounded(self):
        rng = random.Random(777)
        for _ in range(100):
            a = token_set("a", ["x", "y"], [[rng.uniform(-1, 1) + 0.01 for _ in range(3)] for _ in range(2)])
            b = token_set("b", ["z"], [[rng.uniform(-1, 1) + 0.01 for _ in range(3)]])
            triple = bert_score(a, b)
            assert -1.0 <= triple.precision <= 1.0
            assert -1.0 <= triple.recall <= 1.0
            # the harmonic mean is only bounded once both components are
            # nonnegative (mixed signs can blow it up; real encoders do not
            # produce that regime)
            if triple.precision >= 0.0 and triple.recall >= 0.0:
                assert 0.0 <= triple.f1 <= 1.0

    def test_nonnegative_cosines_give_unit_interval_components(self):
        rng = random.Random(778)
        for _ in range(100):
            a = token_set("a", ["x", "y"], [[rng.uniform(0.01, 1) for _ in range(3)] for _ in range(2)])
            b = token_set("b", ["z"], [[rng.uniform(0.01, 1) for _ in range(3)]])
            triple = bert_score(a, b)
            for value in (triple.precision, triple.recall, triple.f1):
                assert 0.0 <= value <= 1.0


class TestBiEncoder:
    def test_identical_vectors(self):
        a = SentenceEmbedding("a", "m", np.asarray([1.0, 2.0, 2.0]))
        b = SentenceEmbedding("b", "m", np.asarray([1.0, 2.0, 2.0]))
        assert bi_encoder_score(a, b) == 1.0

    def test_opposite_vectors(self):
        a = SentenceEmbedding("a", "m", np.asarray([1.0, -2.0]))
        b = SentenceEmbedding("b", "m", np.asarray([-1.0, 2.0]))
        assert bi_encoder_score(a, b) == pytest.approx(-1.0, abs=1e-12)
        assert bi_encoder_score(a, b) >= -1.0

    def test_exactly_symmetric(self):
        rng = random.Random(42)
        for _ in range(100):
            u = np.asarray([rng.uniform(-1, 1) + 0.01 for _ in range(6)])
            v = np.asarray([rng.uniform(-1, 1) + 0.01 for _ in range(6)])
            a = SentenceEmbedding("a", "m", u)
            b = SentenceEmbedding("b", "m", v)
            assert bi_encoder_score(a, b) == bi_encoder_score(b, a)

    def test_model_mismatch(self):
        a = SentenceEmbedding("a", "m1", np.asarray([1.0]))
        b = SentenceEmbedding("b", "m2", np.asarray([1.0]))
        with pytest.raises(ModelMismatch):
            bi_encoder_score(a, b)


def sweep_dataset():
    rows = [
        ("s1", "sun bright light", "sun warm glow", 2),
        ("s2", "cold night wind", "cold dark storm", 0),
        ("s3", "green leaf fern", "green moss stone", 1),
        ("s4", "red clay brick", "red iron rust", 2),
        ("s5", "calm lake shore", "rough sea cliff", 0),
        ("s6", "tall pine tree", "short oak shrub", 1),
    ]
    records = tuple(
        EvalRecord(id=i, answer_a=a, answer_b=b, label=label, lang="en")
        for i, a, b, label in rows
    )
    return Dataset(name="sweep", records=records, lang="en")


def sets_for(dataset, layer, informative=False):
    """informative: vectors encode the label so scores track labels."""
    sets = {}
    for record in dataset:
        for side, text in (("a", record.answer_a), ("b", record.answer_b)):
            tid = f"{record.id}#{side}"
            if informative:
                base = np.zeros(4)
                base[record.label] = 1.0
                if side == "b":
                    # prediction vector drifts away for low labels
                    base = base + (2 - record.label) * np.asarray([0.0, 0.0, 0.0, 1.0])
                vectors = np.tile(base, (len(text.split()), 1)) + 0.01
                sets[tid] = token_set(tid, text.split(), vectors, layer=layer)
            else:
                sets[tid] = synth.token_set_for(tid, text, layer)
    return sets


class TestLayerSweep:
    def test_single_layer_matches_direct_evaluation(self):
        dataset = sweep_dataset()
        sets = sets_for(dataset, layer=2)
        rows = layer_sweep(dataset, {2: sets})
        direct = {}
        for record in dataset:
            direct[record.id] = bert_score(sets[f"{record.id}#a"], sets[f"{record.id}#b"]).f1
        from answersim.rankstats import correlate_partitioned

        expected = correlate_partitioned(dataset, direct)
        assert len(rows) == 3
        for row in rows:
            assert row.outcome == expected[row.partition]

    def test_identical_layers_give_identical_rows(self):
        dataset = sweep_dataset()
        sets2 = sets_for(dataset, layer=2)
        sets5 = {
            tid: TokenEmbeddingSet(
                text_id=tid, model_id=s.model_id, layer=5, tokens=s.tokens, vectors=s.vectors
            )
            for tid, s in sets2.items()
        }
        rows = layer_sweep(dataset, {2: sets2, 5: sets5})
        by_layer = {}
        for row in rows:
            by_layer.setdefault(row.layer, {})[row.partition] = row.outcome
        assert by_layer[2] == by_layer[5]

    def test_informative_layer_beats_noise_layer(self):
        dataset = sweep_dataset()
        layered = {
            2: sets_for(dataset, layer=2, informative=True),
            12: sets_for(dataset, layer=12, informative=False),
        }
        rows = layer_sweep(dataset, layered)
        rho = {
            row.layer: row.outcome.spearman_rho
            for row in rows
            if row.partition == PartitionKey.ALL and isinstance(row.outcome, CorrelationTriple)
        }
        assert rho[2] > rho[12]

    def test_missing_layer_rejected(self):
        dataset = sweep_dataset()
        with pytest.raises(MissingLayer):
            layer_sweep(dataset, {2: sets_for(dataset, 2)}, layers=[2, 7])

    def test_missing_text_rejected(self):
        dataset = sweep_dataset()
        sets = sets_for(dataset, 2)
        del sets["s3#b"]
        with pytest.raises(MissingEmbedding):
            layer_sweep(dataset, {2: sets})

    def test_idf_flag_builds_reference_side_table(self):
        dataset = sweep_dataset()
        rows = layer_sweep(dataset, {2: sets_for(dataset, 2)}, use_idf=True)
        assert len(rows) == 3


class TestBertScoreTripleInvariant:
    def test_f1_zero_when_components_cancel(self):
        triple = BertScoreTriple(precision=0.0, recall=0.0, f1=0.0)
        assert triple.f1 == 0.0

    def test_idf_table_type_roundtrip(self):
        table = IdfTable(model_id="m", doc_count=3, weights={"a": 0.5})
        assert table.weight("a") == 0.5
