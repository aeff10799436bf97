"""Lookup decoding vs brute-force oracles, evaluation metrics, stub clients."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ovhar.data import SensorSequence
from ovhar.decode import (
    EvalSplit,
    LookupInversionStub,
    TokenOverlapMappingStub,
    cosine_sim,
    decode,
    predict_activity,
    score_predictions,
)
from ovhar.errors import ClientError, DecodeError, OvharError
from ovhar.lexicon import EmbeddingTable
from ovhar.nn.model import ModelConfig, RegressorModel
from ovhar.rng import SplitMix64
from ovhar.windows import WindowConfig


def make_table(vectors: dict[str, np.ndarray]) -> EmbeddingTable:
    dim = len(next(iter(vectors.values())))
    return EmbeddingTable(
        encoder_name="unit-test",
        entries={cid: (f"sentence {cid}", np.asarray(v, dtype=np.float64)) for cid, v in vectors.items()},
        dim=dim,
    )


def brute_force_rank(h, table):
    """Independent oracle: plain-python cosine and sort."""
    sims = []
    for cid in table.entries:
        e = table.embedding(cid)
        dot = sum(float(a) * float(b) for a, b in zip(h, e))
        nh = math.sqrt(sum(float(a) ** 2 for a in h))
        ne = math.sqrt(sum(float(b) ** 2 for b in e))
        sims.append((cid, dot / (nh * ne)))
    return sorted(sims, key=lambda item: (-item[1], item[0]))


class TestCosine:
    def test_identical_vectors(self):
        v = SplitMix64(1).normals(768)
        assert cosine_sim(v, v.copy()) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        a, b = np.zeros(768), np.zeros(768)
        a[0] = 1.0
        b[1] = 1.0
        assert cosine_sim(a, b) == 0.0

    def test_hand_dot_product(self):
        a, b = np.zeros(768), np.zeros(768)
        a[0], a[1] = 1.0, 2.0
        b[0], b[1] = 2.0, 1.0
        assert cosine_sim(a, b) == pytest.approx(4.0 / 5.0, abs=1e-15)

    def test_zero_vector_rejected(self):
        with pytest.raises(DecodeError, match="undefined similarity"):
            cosine_sim(np.zeros(768), np.ones(768))

    def test_range(self):
        rng = SplitMix64(2)
        for _ in range(20):
            val = cosine_sim(rng.normals(16), rng.normals(16))
            assert -1.0 - 1e-12 <= val <= 1.0 + 1e-12


class TestDecode:
    def test_exact_match_singleton_tie(self):
        rng = SplitMix64(3)
        table = make_table({f"c{i}": rng.normals(32) for i in range(5)})
        h = table.embedding("c2").copy()
        pred = decode(h, table)
        assert pred.top == "c2"
        assert pred.tie_set == ["c2"]
        assert len(pred.ranked) == 5

    def test_identical_embeddings_forced_tie(self):
        v = SplitMix64(4).normals(16)
        table = make_table({"zebra": v, "aardvark": v.copy(), "other": np.roll(v, 3)})
        pred = decode(v * 2.0, table)
        assert pred.tie_set == ["aardvark", "zebra"]
        assert pred.top == "aardvark"  # lexicographic min of the tie set

    def test_three_entry_hand_ranked(self):
        # base vector plus entries engineered to similarities ~{0.9, 0.2, -0.1}
        h = np.zeros(8)
        h[0] = 1.0

        def with_cos(c, seed):
            # unit vector at angle arccos(c) from h in a random plane
            rng = SplitMix64(seed)
            orth = rng.normals(8)
            orth[0] = 0.0
            orth /= np.linalg.norm(orth)
            return c * h + math.sqrt(1 - c * c) * orth

        table = make_table({"a": with_cos(0.9, 1), "b": with_cos(0.2, 2), "c": with_cos(-0.1, 3)})
        pred = decode(h, table)
        assert [cid for cid, _ in pred.ranked] == ["a", "b", "c"]
        assert pred.ranked[0][1] == pytest.approx(0.9, abs=1e-12)
        oracle = brute_force_rank(h, table)
        assert [c for c, _ in pred.ranked] == [c for c, _ in oracle]
        for (_, s1), (_, s2) in zip(pred.ranked, oracle):
            assert s1 == pytest.approx(s2, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), scale=st.floats(1e-6, 1e6))
    def test_scale_invariance_of_ranking(self, seed, scale):
        rng = SplitMix64(seed)
        table = make_table({f"c{i:02d}": rng.normals(24) for i in range(8)})
        h = rng.normals(24)
        base = decode(h, table)
        scaled = decode(h * scale, table)
        assert [c for c, _ in base.ranked] == [c for c, _ in scaled.ranked]
        assert base.tie_set == scaled.tie_set

    def test_oracle_equivalence_random_tables(self):
        rng = SplitMix64(77)
        for trial in range(20):
            n = 2 + rng.next_u64() % 30
            table = make_table({f"c{i:03d}": rng.normals(16) for i in range(n)})
            h = rng.normals(16)
            pred = decode(h, table)
            oracle = brute_force_rank(h, table)
            assert [c for c, _ in pred.ranked] == [c for c, _ in oracle]
            for (_, s1), (_, s2) in zip(pred.ranked, oracle):
                assert s1 == pytest.approx(s2, abs=1e-12)

    def test_empty_table_rejected(self):
        with pytest.raises(DecodeError):
            decode(np.ones(4), make_table({"x": np.ones(4)}).subset([]))

    def test_deterministic(self):
        rng = SplitMix64(5)
        table = make_table({f"c{i}": rng.normals(12) for i in range(6)})
        h = rng.normals(12)
        assert decode(h, table) == decode(h, table)


class TestPredictActivity:
    def make_model(self):
        return RegressorModel(ModelConfig(in_channels=2, conv_filters=4, hidden_size=4, seed=6))

    def make_seq(self, length):
        samples = SplitMix64(9).normals(length * 2).reshape(length, 2)
        return SensorSequence(id="rec", class_id="c", modality="imu", rate_hz=10.0, samples=samples)

    def test_single_window_equals_plain_decode(self):
        model = self.make_model()
        table = make_table({f"c{i}": SplitMix64(i + 20).normals(768) for i in range(4)})
        seq = self.make_seq(30)  # < 50 samples: one padded window
        activity = predict_activity(model, seq, WindowConfig(), table)
        assert activity.window_count == 1
        direct = decode(model.forward(np.vstack([seq.samples, np.zeros((20, 2))])), table)
        assert activity.final.top == direct.top
        assert activity.final.ranked == [(c, pytest.approx(s, abs=1e-12)) for c, s in direct.ranked]

    def test_mean_aggregation_matches_summation_oracle(self):
        model = self.make_model()
        table = make_table({f"c{i}": SplitMix64(i + 40).normals(768) for i in range(3)})
        seq = self.make_seq(120)  # several sliding windows
        activity = predict_activity(model, seq, WindowConfig(stride_seconds=2.5), table)
        from ovhar.windows import segment

        windows = segment(seq, WindowConfig(stride_seconds=2.5))
        acc = np.zeros(768)
        for w in windows:
            acc += model.forward(w.samples)
        oracle_mean = acc / len(windows)
        assert np.allclose(activity.embedding, oracle_mean, atol=1e-12)
        assert activity.final.top == decode(oracle_mean, table).top

    def test_channel_mismatch(self):
        model = self.make_model()
        table = make_table({"c": np.ones(768)})
        seq = SensorSequence(
            id="x", class_id=None, modality="imu", rate_hz=10.0, samples=np.zeros((30, 5))
        )
        with pytest.raises(OvharError, match="channel mismatch"):
            predict_activity(model, seq, WindowConfig(), table)

    def test_degenerate_zero_embedding_surfaces_error(self):
        # an all-zero model predicts the zero vector: undecodable, not silent
        model = RegressorModel(
            ModelConfig(in_channels=2, conv_filters=4, hidden_size=4, seed=0), init=False
        )
        table = make_table({"c": np.ones(768)})
        with pytest.raises(DecodeError, match="undefined similarity"):
            predict_activity(model, self.make_seq(30), WindowConfig(), table)


def test_evaluate_marks_undecodable_activities(tmp_path):
    from ovhar.data import load_manifest
    from ovhar.decode import evaluate
    from ovhar.lexicon import build_table, load_lexicon
    from ovhar.synth import ChannelPattern, MotionPrimitive, SynthSpec, generate

    spec = SynthSpec(
        rate_hz=25.0, channels=2, noise_std=0.0,
        classes=[("solo", ["m_a"]), ("other", ["m_b"])],
        records_per_class=2, seed=1,
        primitives={
            mid: MotionPrimitive(
                motion_id=mid, duration_seconds=1.0,
                channels=[ChannelPattern(2.0 + i, 1.0, 0.0), ChannelPattern(2.0 + i, 0.5, 0.0)],
            )
            for i, mid in enumerate(["m_a", "m_b"])
        },
    )
    manifest_path, lexicon_path = generate(spec, tmp_path)
    manifest = load_manifest(manifest_path)
    lexicon = load_lexicon(lexicon_path)
    table = build_table(lexicon, lexicon.class_ids())
    zero_model = RegressorModel(
        ModelConfig(in_channels=2, conv_filters=4, hidden_size=4, seed=0), init=False
    )
    report = evaluate(
        zero_model, manifest, EvalSplit(train_class_ids=["other"], test_class_ids=["solo"]),
        table, WindowConfig(),
    )
    assert report.undecodable == ["solo_r00", "solo_r01"]
    assert report.macro_f1 == 0.0


class TestEvalSplit:
    def test_overlap_rejected(self):
        with pytest.raises(OvharError, match="overlap"):
            EvalSplit(train_class_ids=["a", "b"], test_class_ids=["b", "c"])

    def test_coverage_validation(self):
        from ovhar.lexicon import ActivityClass, AtomicMotion, Lexicon

        lex = Lexicon()
        for mid in ("m1", "m2", "m3"):
            lex.motions[mid] = AtomicMotion(mid, mid)
        lex.classes["a"] = ActivityClass("a", "a", ["m1", "m2"])
        lex.classes["b"] = ActivityClass("b", "b", ["m2", "m3"])
        lex.classes["c"] = ActivityClass("c", "c", ["m1", "m3"])
        EvalSplit(["a", "b"], ["c"]).validate_coverage(lex)  # m1, m3 covered
        lex.classes["d"] = ActivityClass("d", "d", ["m4_unseen"])
        lex.motions["m4_unseen"] = AtomicMotion("m4_unseen", "novel move")
        with pytest.raises(OvharError, match="m4_unseen"):
            EvalSplit(["a", "b"], ["d"]).validate_coverage(lex)


class TestScoring:
    def independent_f1(self, pairs, cls):
        """Scripted confusion-matrix oracle, built from first principles."""
        tp = sum(1 for t, p in pairs if t == cls and p == cls)
        fp = sum(1 for t, p in pairs if t != cls and p == cls)
        fn = sum(1 for t, p in pairs if t == cls and p != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        return 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    def test_perfect_predictor(self):
        pairs = [("a", "a")] * 3 + [("b", "b")] * 2
        macro, per_class, _ = score_predictions(pairs)
        assert macro == 1.0
        assert per_class["a"]["support"] == 3

    def test_two_class_hand_case(self):
        # supports (2,2); one class-2 activity predicted as class 1
        pairs = [("c1", "c1"), ("c1", "c1"), ("c2", "c2"), ("c2", "c1")]
        macro, per_class, confusion = score_predictions(pairs)
        assert per_class["c1"]["f1"] == pytest.approx(0.8)
        assert per_class["c2"]["f1"] == pytest.approx(2.0 / 3.0)
        assert macro == pytest.approx((0.8 + 2.0 / 3.0) / 2.0)  # 0.7333...
        for cls in ("c1", "c2"):
            assert per_class[cls]["f1"] == pytest.approx(self.independent_f1(pairs, cls))
        assert confusion["c2"] == {"c2": 1, "c1": 1}

    def test_macro_excludes_zero_support(self):
        # predictions to a class never appearing as truth don't add F1 terms
        pairs = [("a", "a"), ("a", "ghost")]
        macro, per_class, _ = score_predictions(pairs)
        assert set(per_class) == {"a"}
        assert macro == per_class["a"]["f1"]

    def test_random_uniform_predictor_near_chance(self):
        # Monte Carlo oracle: uniform guessing over 3 candidates -> F1 ~ 1/3
        rng = SplitMix64(123)
        classes = ["x", "y", "z"]
        pairs = []
        for _ in range(1000):
            truth = classes[rng.next_u64() % 3]
            guess = classes[rng.next_u64() % 3]
            pairs.append((truth, guess))
        macro, _, _ = score_predictions(pairs)
        assert macro == pytest.approx(1.0 / 3.0, abs=0.05)

    def test_relabeling_invariance(self):
        rng = SplitMix64(9)
        names = ["a", "b", "c", "d"]
        pairs = [
            (names[rng.next_u64() % 4], names[rng.next_u64() % 4]) for _ in range(200)
        ]
        mapping = {"a": "w", "b": "x", "c": "y", "d": "z"}
        relabeled = [(mapping[t], mapping[p]) for t, p in pairs]
        assert score_predictions(pairs)[0] == pytest.approx(score_predictions(relabeled)[0])


class TestStubClients:
    def test_inversion_stub_returns_exact_sentence(self):
        rng = SplitMix64(15)
        table = make_table({f"c{i}": rng.normals(64) for i in range(4)})
        stub = LookupInversionStub(table)
        assert stub.invert(table.embedding("c2") * 3.0) == "sentence c2"

    def test_mapping_stub_with_alias_lexicon(self):
        text = "Perform a right arm swipe with a body rotation followed by an arm follow-through"
        aliases = {"baseball swing": ["arm swipe", "rotation", "follow-through"]}
        stub = TokenOverlapMappingStub(aliases)
        got = stub.map_text(text, ["baseball swing", "tennis forehand", "basketball shoot"])
        assert got == "baseball swing"

    def test_mapping_stub_empty_candidates(self):
        with pytest.raises(ClientError):
            TokenOverlapMappingStub().map_text("anything", [])

    def test_unreachable_endpoint_errors(self):
        from ovhar.decode import HttpMappingClient, HttpTextClient

        with pytest.raises(ClientError):
            HttpTextClient("http://127.0.0.1:1/invert", timeout_seconds=0.2).invert(np.ones(4))
        with pytest.raises(ClientError):
            HttpMappingClient("http://127.0.0.1:1/map", timeout_seconds=0.2).map_text("x", ["a"])
