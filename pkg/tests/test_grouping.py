import numpy as np
import pytest

from chroma import colors
from chroma.errors import ValidationError
from chroma.grouping import (
    ClusterModel,
    adjusted_rand_index,
    cluster_objects,
    label_clusters,
    stability_check,
)
from chroma.synthetic import three_family_profiles


@pytest.fixture
def families():
    return three_family_profiles(per_family=20, seed=0)


def test_k1_centroid_is_mean(families):
    profiles, _ = families
    model = cluster_objects(profiles, k=1, seed=0)
    expected = np.stack([profiles[i] for i in sorted(profiles)]).mean(axis=0)
    np.testing.assert_allclose(model.centroids[0], expected, atol=1e-12)
    assert set(model.assignments.values()) == {0}


def test_three_families_recovered(families):
    profiles, truth = families
    ids = sorted(profiles)
    model = cluster_objects(profiles, k=3, seed=1)
    assignment = [model.assignments[i] for i in ids]
    assert adjusted_rand_index(assignment, [truth[i] for i in ids]) == 1.0

    # brute-force nearest-centroid verification
    for oid in ids:
        dists = [colors.js_distance(profiles[oid], c) for c in model.centroids]
        assert model.assignments[oid] == int(np.argmin(dists))


def test_centroids_are_sorted_distributions(families):
    profiles, _ = families
    model = cluster_objects(profiles, k=3, seed=0)
    for c in model.centroids:
        assert c.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(np.diff(c) <= 1e-15)


def test_too_few_profiles():
    profiles = {"a": colors.uniform(), "b": colors.uniform()}
    with pytest.raises(ValidationError, match="at least k=3"):
        cluster_objects(profiles, k=3, seed=0)
    identical = {name: colors.uniform() for name in "abcd"}
    with pytest.raises(ValidationError, match="distinct"):
        cluster_objects(identical, k=3, seed=0)


def test_inertia_history_non_increasing(families):
    profiles, _ = families
    for seed in range(5):
        hist = cluster_objects(profiles, k=3, seed=seed).inertia_history
        assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))


def test_color_invariance(families):
    # permuting color identities leaves sorted profiles (hence clusters) alone
    profiles, _ = families
    rng = np.random.default_rng(3)
    perm = rng.permutation(11)
    permuted = {k: colors.sorted_profile(v[perm]) for k, v in profiles.items()}
    a = cluster_objects(profiles, k=3, seed=4).assignments
    b = cluster_objects(permuted, k=3, seed=4).assignments
    assert a == b


def test_label_clusters_extremes():
    single_like = np.array([0.73, 0.1, 0.05, 0.04, 0.03, 0.02, 0.01, 0.01, 0.01, 0.0, 0.0])
    multi_like = np.array([0.30, 0.25, 0.20, 0.15, 0.04, 0.02, 0.02, 0.01, 0.01, 0.0, 0.0])
    any_like = np.full(11, 1.0 / 11)
    model = ClusterModel(
        k=3,
        centroids=np.stack([multi_like, any_like, single_like]),
        assignments={"wine": 0, "shirt": 1, "lemon": 2},
    )
    labeled = label_clusters(model)
    assert labeled.group_of("lemon") == "single"
    assert labeled.group_of("wine") == "multi"
    assert labeled.group_of("shirt") == "any"


def test_label_clusters_permutation_invariant(families):
    profiles, truth = families
    model = cluster_objects(profiles, k=3, seed=0)
    labeled = label_clusters(model)
    groups = {oid: labeled.group_of(oid) for oid in profiles}

    perm = [2, 0, 1]
    inverse = {old: new for new, old in enumerate(perm)}
    permuted = ClusterModel(
        k=3,
        centroids=model.centroids[perm],
        assignments={oid: inverse[c] for oid, c in model.assignments.items()},
    )
    relabeled = label_clusters(permuted)
    assert {oid: relabeled.group_of(oid) for oid in profiles} == groups


def test_label_clusters_requires_k3_and_distinct_extremes():
    model = ClusterModel(k=2, centroids=np.stack([colors.uniform()] * 2), assignments={})
    with pytest.raises(ValidationError, match="k=3"):
        label_clusters(model)
    tied = ClusterModel(
        k=3,
        centroids=np.stack([colors.uniform(), colors.uniform(), colors.uniform()]),
        assignments={},
    )
    with pytest.raises(ValidationError, match="ambiguous extremes"):
        label_clusters(tied)


def test_adjusted_rand_index_against_pair_oracle(rng):
    def oracle(a, b):
        n = len(a)
        same_a = same_b = same_both = pairs = 0
        for i in range(n):
            for j in range(i + 1, n):
                pairs += 1
                sa, sb = a[i] == a[j], b[i] == b[j]
                same_a += sa
                same_b += sb
                same_both += sa and sb
        expected = same_a * same_b / pairs
        max_index = (same_a + same_b) / 2
        if max_index == expected:
            return 1.0
        return (same_both - expected) / (max_index - expected)

    assert adjusted_rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    for _ in range(50):
        a = list(rng.integers(0, 3, size=12))
        b = list(rng.integers(0, 3, size=12))
        assert adjusted_rand_index(a, b) == pytest.approx(oracle(a, b), abs=1e-12)


def test_stability_perfectly_separated(families):
    profiles, _ = families
    report = stability_check(profiles, k=3, seeds=[0, 1, 2, 3, 4])
    assert report.min_ari == 1.0
    assert not report.non_separable
    assert len(report.pairwise_ari) == 10


def test_stability_duplicated_profiles():
    base = {
        "a": colors.sorted_profile(colors.delta("red")),
        "b": colors.sorted_profile(np.full(11, 1 / 11)),
        "c": colors.sorted_profile(colors.normalize(np.array([3, 3, 3, 1, 1, 1, 0, 0, 0, 0, 0.0]))),
    }
    profiles = {}
    for name, p in base.items():
        for i in range(5):
            profiles[f"{name}{i}"] = p
    report = stability_check(profiles, k=3, seeds=[0, 1, 2])
    assert report.min_ari == 1.0


def test_stability_non_separable():
    profiles = {f"o{i}": colors.uniform() for i in range(10)}
    report = stability_check(profiles, k=3, seeds=[0, 1])
    assert report.non_separable
    assert report.min_ari is None


def test_stability_needs_two_seeds(families):
    profiles, _ = families
    with pytest.raises(ValidationError):
        stability_check(profiles, k=3, seeds=[0])
