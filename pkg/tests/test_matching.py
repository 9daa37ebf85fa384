"""Matching tests: cosine, templates, protocol splits, score generation."""

import math

import numpy as np
import pytest

from mmwtex.imaging import BodyPart
from mmwtex.matching import (
    ScoreSet,
    build_template,
    cosine_similarity,
    cross_pose_protocol,
    frontal_protocol,
    run_identification,
    run_verification,
    scores_from_csv,
    scores_to_csv,
    split_gallery_probe,
)
from mmwtex.records import FeatureKind, FeatureVector, Pose, SampleRecord


def make_dataset(rng, subjects, frontal=4, lateral=0, dim=16, part=BodyPart.TORSO,
                 subject_noise=0.0, identical=False):
    """Random dataset: one base vector per subject + per-sample noise."""
    dataset = []
    shared = np.abs(rng.normal(size=dim)) + 0.1
    for s in range(subjects):
        subject_id = f"s{s:03d}"
        base = shared if identical else np.abs(rng.normal(size=dim)) + 0.1
        for pose, count in ((Pose.FRONTAL, frontal), (Pose.LATERAL, lateral)):
            for j in range(count):
                rec = SampleRecord(subject_id, f"{subject_id}_{pose.value}{j}", part, pose)
                values = base + subject_noise * np.abs(rng.normal(size=dim))
                dataset.append((rec, FeatureVector(FeatureKind.EMBEDDING, values,
                                                   part=part, source=rec)))
    return dataset


class TestCosineSimilarity:
    def test_self_similarity_is_one(self):
        rng = np.random.default_rng(60)
        for _ in range(10):
            v = rng.normal(size=8)
            assert abs(cosine_similarity(v, v) - 1.0) < 1e-12

    def test_orthogonal_is_zero(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_closed_form_inverse_sqrt2(self):
        assert abs(cosine_similarity([1.0, 0.0], [1.0, 1.0]) - 1 / math.sqrt(2)) < 1e-15

    def test_symmetric_and_scale_invariant(self):
        rng = np.random.default_rng(61)
        for _ in range(20):
            a, b = rng.normal(size=12), rng.normal(size=12)
            alpha = float(rng.uniform(0.1, 50.0))
            assert abs(cosine_similarity(a, b) - cosine_similarity(b, a)) < 1e-12
            assert abs(cosine_similarity(alpha * a, b) - cosine_similarity(a, b)) < 1e-12

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            cosine_similarity(np.zeros(3), np.ones(3))

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            cosine_similarity(np.ones(3), np.ones(4))

    def test_nonnegative_features_score_in_unit_interval(self):
        rng = np.random.default_rng(62)
        for _ in range(50):
            a = np.abs(rng.normal(size=10))
            b = np.abs(rng.normal(size=10))
            score = cosine_similarity(a, b)
            assert 0.0 <= score <= 1.0 + 1e-12


class TestBuildTemplate:
    def test_single_feature_is_itself(self):
        vec = FeatureVector(FeatureKind.EMBEDDING, np.array([1.0, 2.0, 3.0]))
        np.testing.assert_array_equal(build_template([vec]).values, vec.values)

    def test_midpoint(self):
        a = FeatureVector(FeatureKind.EMBEDDING, np.array([0.0, 2.0]))
        b = FeatureVector(FeatureKind.EMBEDDING, np.array([2.0, 0.0]))
        np.testing.assert_array_equal(build_template([a, b]).values, [1.0, 1.0])

    def test_five_vectors_match_summation_oracle(self):
        rng = np.random.default_rng(63)
        vs = [FeatureVector(FeatureKind.EMBEDDING, rng.normal(size=9)) for _ in range(5)]
        total = np.zeros(9)
        for v in vs:
            total = total + v.values
        np.testing.assert_allclose(build_template(vs).values, total / 5.0, atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="zero features"):
            build_template([])

    def test_heterogeneous_dims_rejected(self):
        a = FeatureVector(FeatureKind.EMBEDDING, np.ones(3))
        b = FeatureVector(FeatureKind.EMBEDDING, np.ones(4))
        with pytest.raises(ValueError, match="dims"):
            build_template([a, b])

    def test_heterogeneous_kinds_rejected(self):
        a = FeatureVector(FeatureKind.EMBEDDING, np.ones(4))
        b = FeatureVector(FeatureKind.FUSED, np.ones(4))
        with pytest.raises(ValueError, match="kinds"):
            build_template([a, b])


class TestSplit:
    def test_gallery_probe_disjoint_and_sized(self):
        rng = np.random.default_rng(64)
        dataset = make_dataset(rng, 10, frontal=4)
        gallery, probes = split_gallery_probe(dataset, frontal_protocol(3))
        assert len(gallery) == 10
        probe_keys = {rec.key for rec, _ in probes}
        assert len(probes) == 20
        for subject, pairs in gallery.items():
            assert len(pairs) == 2
            for rec, _ in pairs:
                assert rec.key not in probe_keys
                assert rec.pose is Pose.FRONTAL

    def test_cross_pose_pools(self):
        rng = np.random.default_rng(65)
        dataset = make_dataset(rng, 6, frontal=2, lateral=2)
        gallery, probes = split_gallery_probe(dataset, cross_pose_protocol(1))
        for pairs in gallery.values():
            assert all(rec.pose is Pose.FRONTAL for rec, _ in pairs)
        assert all(rec.pose is Pose.LATERAL for rec, _ in probes)

    def test_deterministic_and_seed_sensitive(self):
        rng = np.random.default_rng(66)
        dataset = make_dataset(rng, 12, frontal=6)
        pick = lambda seed: [
            rec.sample_id
            for subject in sorted(split_gallery_probe(dataset, frontal_protocol(seed))[0])
            for rec, _ in split_gallery_probe(dataset, frontal_protocol(seed))[0][subject]
        ]
        assert pick(5) == pick(5)
        assert pick(5) != pick(6)

    def test_input_order_does_not_matter(self):
        rng = np.random.default_rng(67)
        dataset = make_dataset(rng, 8, frontal=4)
        shuffled = list(dataset)
        rng.shuffle(shuffled)
        a = run_verification(dataset, frontal_protocol(2))
        b = run_verification(shuffled, frontal_protocol(2))
        np.testing.assert_array_equal(a.matrix, b.matrix)
        assert a.probe_ids == b.probe_ids

    def test_insufficient_samples_names_subject(self):
        rng = np.random.default_rng(68)
        dataset = make_dataset(rng, 3, frontal=4)
        dataset = [
            (rec, vec) for rec, vec in dataset
            if not (rec.subject_id == "s001" and rec.sample_id.endswith("3"))
        ]
        with pytest.raises(ValueError, match="s001"):
            split_gallery_probe(dataset, frontal_protocol(0))

    def test_occluded_excluded_by_default(self):
        rng = np.random.default_rng(69)
        dataset = make_dataset(rng, 2, frontal=4)
        occluded = [
            (SampleRecord(rec.subject_id, rec.sample_id + "_occ", rec.part, rec.pose, True), vec)
            for rec, vec in dataset
        ]
        gallery, probes = split_gallery_probe(dataset + occluded, frontal_protocol(0))
        for pairs in list(gallery.values()) + [probes]:
            assert all(not rec.occluded for rec, _ in pairs)

    def test_duplicate_key_rejected(self):
        rng = np.random.default_rng(70)
        dataset = make_dataset(rng, 2, frontal=4)
        with pytest.raises(ValueError, match="duplicate"):
            split_gallery_probe(dataset + [dataset[0]], frontal_protocol(0))


class TestRunVerification:
    def test_fifty_subjects_score_counts(self):
        rng = np.random.default_rng(71)
        dataset = make_dataset(rng, 50, frontal=4, subject_noise=0.1)
        scores = run_verification(dataset, frontal_protocol(7))
        assert scores.genuine.size == 100
        assert scores.impostor.size == 4900

    def test_single_subject_degenerate(self):
        rng = np.random.default_rng(72)
        dataset = make_dataset(rng, 1, frontal=4)
        scores = run_verification(dataset, frontal_protocol(0))
        assert scores.genuine.size == 2
        assert scores.impostor.size == 0

    def test_identical_population_scores_all_one(self):
        rng = np.random.default_rng(73)
        dataset = make_dataset(rng, 3, frontal=4, identical=True)
        scores = run_verification(dataset, frontal_protocol(0))
        assert scores.matrix.size == 6 * 3 == 18
        np.testing.assert_allclose(scores.matrix, 1.0, atol=1e-12)

    def test_count_formula_random_sizes(self):
        rng = np.random.default_rng(74)
        for subjects in (2, 5, 13):
            dataset = make_dataset(rng, subjects, frontal=4)
            scores = run_verification(dataset, frontal_protocol(1))
            probes = 2 * subjects
            assert scores.genuine.size == probes
            assert scores.impostor.size == probes * (subjects - 1)

    def test_matrix_matches_scalar_cosine(self):
        rng = np.random.default_rng(75)
        dataset = make_dataset(rng, 4, frontal=4, subject_noise=0.3)
        gallery, probes = split_gallery_probe(dataset, frontal_protocol(4))
        scores = run_verification(dataset, frontal_protocol(4))
        subjects = sorted(gallery)
        for i, (rec, vec) in enumerate(probes):
            for j, subject in enumerate(subjects):
                template = build_template([v for _, v in gallery[subject]])
                expected = cosine_similarity(vec, template)
                assert abs(scores.matrix[i, j] - expected) < 1e-12

    def test_zero_vector_features_rejected(self):
        rng = np.random.default_rng(76)
        dataset = make_dataset(rng, 2, frontal=4)
        dataset = [
            (rec, FeatureVector(FeatureKind.EMBEDDING, np.zeros(16), part=rec.part,
                                source=rec))
            if rec.subject_id == "s000"
            else (rec, vec)
            for rec, vec in dataset
        ]
        with pytest.raises(ValueError, match="zero-norm"):
            run_verification(dataset, frontal_protocol(0))


class TestRunIdentification:
    def test_matrix_shape_fifty_subjects(self):
        rng = np.random.default_rng(77)
        dataset = make_dataset(rng, 50, frontal=4, subject_noise=0.1)
        scores = run_identification(dataset, frontal_protocol(0))
        assert scores.matrix.shape == (100, 50)
        assert scores.true_index.shape == (100,)

    def test_single_subject_rank_one(self):
        rng = np.random.default_rng(78)
        dataset = make_dataset(rng, 1, frontal=4)
        scores = run_identification(dataset, frontal_protocol(0))
        assert scores.matrix.shape == (2, 1)
        assert np.all(scores.true_index == 0)

    def test_probe_equal_to_template_is_row_max(self):
        rng = np.random.default_rng(79)
        dataset = make_dataset(rng, 5, frontal=4, subject_noise=0.0)
        scores = run_identification(dataset, frontal_protocol(0))
        # zero intra-subject noise: every probe equals its own template
        rows = np.arange(scores.matrix.shape[0])
        true_scores = scores.matrix[rows, scores.true_index]
        np.testing.assert_allclose(true_scores, 1.0, atol=1e-12)
        assert np.all(true_scores >= scores.matrix.max(axis=1) - 1e-12)


class TestScoreSet:
    def test_from_matrix_genuine_impostor_split(self):
        matrix = np.array([[0.9, 0.1, 0.2], [0.3, 0.8, 0.4]])
        scores = ScoreSet.from_matrix(matrix, [0, 1])
        np.testing.assert_array_equal(scores.genuine, [0.9, 0.8])
        np.testing.assert_array_equal(scores.impostor, [0.1, 0.2, 0.3, 0.4])

    def test_bad_true_index_rejected(self):
        with pytest.raises(ValueError, match="true_index"):
            ScoreSet.from_matrix(np.ones((2, 2)), [0, 2])

    def test_csv_round_trip(self):
        rng = np.random.default_rng(80)
        matrix = rng.random((4, 3))
        scores = ScoreSet.from_matrix(
            matrix, [0, 1, 2, 0], probe_ids=("p0", "p1", "p2", "p3"),
            subject_ids=("a", "b", "c"),
        )
        out = scores_from_csv(scores_to_csv(scores))
        np.testing.assert_array_equal(out.matrix, scores.matrix)
        np.testing.assert_array_equal(out.true_index, scores.true_index)
        assert out.probe_ids == scores.probe_ids
        assert out.subject_ids == scores.subject_ids
