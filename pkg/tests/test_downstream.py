import numpy as np
import pytest

from fairlift.downstream import (EvalReport, LinearClassifier, LpSplit,
                                 hadamard_features, lp_evaluate, lp_split,
                                 nc_evaluate, read_labels,
                                 stratified_split, train_linear_classifier,
                                 write_labels, write_summary)
from fairlift.embed import embed_spectral
from fairlift.errors import (InputError, NotEnoughNonEdges, SingleClassInput)
from fairlift.graph import build_graph


def blobs(rng, n_per=40, gap=4.0):
    X = np.vstack([rng.standard_normal((n_per, 3)),
                   rng.standard_normal((n_per, 3)) + gap])
    y = np.repeat([0, 1], n_per)
    return X, y


def ring_graph(n, extra_edges=()):
    edges = [(str(i), str((i + 1) % n), 1.0) for i in range(n)]
    edges += [(str(u), str(v), 1.0) for u, v in extra_edges]
    return build_graph(edges, nodes=[str(i) for i in range(n)])


def test_classifier_separable_blobs():
    rng = np.random.default_rng(3)
    X, y = blobs(rng)
    clf = train_linear_classifier(X, y)
    assert np.mean(clf.predict(X) == y) >= 0.99


def test_classifier_duplicated_samples_identical_predictions():
    rng = np.random.default_rng(5)
    X, y = blobs(rng, n_per=15)
    clf = train_linear_classifier(np.vstack([X, X]), np.concatenate([y, y]))
    pred = clf.predict(X)
    assert np.array_equal(pred, clf.predict(X.copy()))
    proba = clf.predict_proba(X)
    assert np.allclose(proba, clf.predict_proba(X.copy()))


def test_classifier_zero_epochs_uniform():
    rng = np.random.default_rng(7)
    X, y = blobs(rng, n_per=10)
    clf = train_linear_classifier(X, y, epochs=0)
    proba = clf.predict_proba(X)
    assert np.allclose(proba, 0.5, atol=1e-12)
    assert clf.loss_trace.shape == (1,)


def test_classifier_single_class_rejected():
    with pytest.raises(SingleClassInput):
        train_linear_classifier(np.zeros((4, 2)), np.zeros(4))


def test_classifier_loss_non_increasing():
    rng = np.random.default_rng(11)
    for trial in range(5):
        X = rng.standard_normal((30, 4))
        y = rng.integers(0, 3, size=30)
        if np.unique(y).size < 2:
            continue
        clf = train_linear_classifier(X, y, epochs=100)
        assert np.all(np.diff(clf.loss_trace) <= 1e-12)


def test_stratified_split_deterministic_and_disjoint():
    rng = np.random.default_rng(13)
    y = rng.integers(0, 3, size=200)
    a = stratified_split(y, (0.5, 0.25, 0.25), seed=4)
    b = stratified_split(y, (0.5, 0.25, 0.25), seed=4)
    for xa, xb in zip(a, b):
        assert np.array_equal(xa, xb)
    train, val, test = a
    combined = np.concatenate([train, val, test])
    assert np.array_equal(np.sort(combined), np.arange(200))
    c = stratified_split(y, (0.5, 0.25, 0.25), seed=5)
    assert not np.array_equal(a[0], c[0])


def test_stratified_split_per_class_counts():
    y = np.repeat([0, 1], [40, 20])
    train, val, test = stratified_split(y, (0.5, 0.25, 0.25), seed=0)
    assert np.sum(y[train] == 0) == 20 and np.sum(y[train] == 1) == 10
    assert np.sum(y[val] == 0) == 10 and np.sum(y[val] == 1) == 5
    assert np.sum(y[test] == 0) == 10 and np.sum(y[test] == 1) == 5


def test_stratified_split_errors():
    with pytest.raises(InputError):
        stratified_split(np.array([0, 1]), (0.5, 0.3, 0.3), seed=0)
    # the lone class-1 sample lands nowhere in train
    with pytest.raises(InputError):
        stratified_split(np.array([0, 0, 0, 1]), (0.5, 0.25, 0.25), seed=0)


def test_nc_one_hot_embedding_perfect():
    rng = np.random.default_rng(17)
    labels = np.repeat([0, 1, 2], 12)
    rng.shuffle(labels)
    E = np.eye(3)[labels]
    groups = rng.integers(0, 2, size=36)
    report = nc_evaluate(E, labels, groups, seed=1)
    assert report.utility["micro_f1"] == 1.0
    assert report.utility["accuracy"] == 1.0
    assert report.fairness["group"]["delta_eo"] == 0.0


def test_nc_constant_embedding_no_disparity():
    rng = np.random.default_rng(19)
    labels = np.array([0, 1] * 20)
    E = np.ones((40, 4))
    groups = rng.integers(0, 2, size=40)
    report = nc_evaluate(E, labels, groups, seed=2)
    assert report.fairness["group"]["delta_dp"] == 0.0


def test_nc_test_leak_canary():
    # permuting labels on the test rows changes metrics but cannot change
    # the trained model, which never sees them
    rng = np.random.default_rng(23)
    n = 80
    labels = rng.integers(0, 2, size=n)
    E = labels[:, None] + 0.5 * rng.standard_normal((n, 3))
    groups = rng.integers(0, 2, size=n)
    train_idx, _, test_idx = stratified_split(labels, (0.5, 0.25, 0.25), seed=3)
    shuffled = labels.copy()
    shuffled[test_idx] = rng.permutation(shuffled[test_idx])
    if np.array_equal(shuffled, labels):
        shuffled[test_idx[0]] = 1 - shuffled[test_idx[0]]

    report_a = nc_evaluate(E, labels, groups, seed=3)
    report_b = nc_evaluate(E, shuffled, groups, seed=3)
    assert report_a.utility["accuracy"] != report_b.utility["accuracy"]
    clf_a = train_linear_classifier(E[train_idx], labels[train_idx])
    clf_b = train_linear_classifier(E[train_idx], shuffled[train_idx])
    assert np.array_equal(clf_a.W, clf_b.W)
    assert np.array_equal(clf_a.b, clf_b.b)


def test_nc_group_dict_and_y_plus():
    rng = np.random.default_rng(29)
    labels = np.repeat([0, 1, 2], 15)
    E = np.eye(3)[labels] + 0.1 * rng.standard_normal((45, 3))
    groups = {"region": rng.integers(0, 2, size=45),
              "age": rng.integers(0, 3, size=45)}
    report = nc_evaluate(E, labels, groups, seed=4, y_plus=(0,))
    assert set(report.fairness) == {"region", "age"}
    flat = report.flat()
    assert "delta_dp[region]" in flat and "delta_eo[age]" in flat
    with pytest.raises(InputError):
        nc_evaluate(E, labels[:-1], groups, seed=4)
    with pytest.raises(InputError):
        nc_evaluate(E, labels, {"region": np.zeros(3)}, seed=4)


def test_lp_split_complete_graph_rejected():
    edges = [(str(i), str(j), 1.0) for i in range(6) for j in range(i + 1, 6)]
    g = build_graph(edges)
    with pytest.raises(NotEnoughNonEdges):
        lp_split(g, ratio=0.2, seed=0)


def test_lp_split_ratio_zero_identity():
    g = ring_graph(12)
    split = lp_split(g, ratio=0.0, seed=1)
    assert split.test_pos.shape == (0, 2)
    assert split.test_neg.shape == (0, 2)
    assert split.train_neg.shape == (12, 2)
    assert split.train_graph.num_edges == g.num_edges


def test_lp_split_too_few_edges():
    g = build_graph([("a", "b", 1.0), ("b", "c", 1.0)], nodes=list("abcdefgh"))
    with pytest.raises(InputError):
        lp_split(g, ratio=0.5, seed=0)
    with pytest.raises(InputError):
        lp_split(g, ratio=1.0, seed=0)


def test_lp_split_disjointness_and_counts():
    rng = np.random.default_rng(31)
    n = 40
    extra = set()
    while len(extra) < 60:
        u, v = sorted(rng.integers(0, n, size=2).tolist())
        if u != v and v != (u + 1) % n and not (u == 0 and v == n - 1):
            extra.add((u, v))
    g = ring_graph(n, sorted(extra))
    split = lp_split(g, ratio=0.25, seed=7)
    n_edges = g.num_edges
    n_test = int(0.25 * n_edges)
    assert split.test_pos.shape == (n_test, 2)
    assert split.test_neg.shape == (n_test, 2)
    assert split.train_neg.shape == (n_edges - n_test, 2)
    assert split.train_graph.num_edges == n_edges - n_test

    full_edges = {(int(u), int(v)) for u, v in zip(g.edge_u, g.edge_v)}
    train_edges = {(int(u), int(v))
                   for u, v in zip(split.train_graph.edge_u, split.train_graph.edge_v)}
    test_pos = {tuple(sorted(p)) for p in split.test_pos.tolist()}
    test_neg = {tuple(sorted(p)) for p in split.test_neg.tolist()}
    train_neg = {tuple(sorted(p)) for p in split.train_neg.tolist()}
    assert test_pos <= full_edges
    assert not (test_pos & train_edges)
    assert not ((test_neg | train_neg) & full_edges)
    assert not (test_neg & train_neg)
    assert len(test_neg) == n_test and len(train_neg) == n_edges - n_test

    again = lp_split(g, ratio=0.25, seed=7)
    assert np.array_equal(split.test_pos, again.test_pos)
    assert np.array_equal(split.test_neg, again.test_neg)


def test_lp_split_keeps_self_loops_in_train():
    g = build_graph([("0", "0", 2.0)] + [(str(i), str((i + 1) % 12), 1.0)
                                         for i in range(12)])
    split = lp_split(g, ratio=0.25, seed=2)
    assert split.train_graph.weight(0, 0) == 2.0
    pairs = np.vstack([split.test_pos, split.test_neg, split.train_neg])
    assert np.all(pairs[:, 0] != pairs[:, 1])


def test_lp_split_enumeration_fallback():
    # dense small graph: available non-edges barely exceed what is needed,
    # forcing the enumeration branch
    n = 8
    chords = [(0, 2), (1, 3), (2, 4), (3, 5), (4, 6)]
    g = ring_graph(n, chords)
    n_edges = g.num_edges
    available = n * (n - 1) // 2 - n_edges
    needed = n_edges  # ratio 0 keeps every edge and matches train negatives
    assert needed <= available <= 2 * needed
    split = lp_split(g, ratio=0.0, seed=3)
    full_edges = {(int(u), int(v)) for u, v in zip(g.edge_u, g.edge_v)}
    train_neg = {tuple(sorted(p)) for p in split.train_neg.tolist()}
    assert not (train_neg & full_edges)
    assert len(train_neg) == n_edges


def test_hadamard_features():
    E = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    pairs = np.array([[0, 0], [1, 2], [2, 1]])
    F = hadamard_features(E, pairs)
    assert F[0].tolist() == [1.0, 1.0]
    assert F[1].tolist() == [0.0, 0.0]  # orthonormal rows
    assert np.array_equal(F[1], F[2])  # symmetric in the pair order
    assert hadamard_features(E, np.zeros((0, 2))).shape == (0, 2)
    with pytest.raises(InputError):
        hadamard_features(E, np.array([[0, 3]]))


def test_lp_evaluate_planted_structure():
    # two cliques with a thin bridge: held-out intra edges are easy to
    # separate from sampled non-edges, which are mostly inter-clique
    k = 12
    edges = []
    for base in (0, k):
        for i in range(k):
            for j in range(i + 1, k):
                edges.append((str(base + i), str(base + j), 1.0))
    edges.append((str(0), str(k), 1.0))
    g = build_graph(edges, nodes=[str(i) for i in range(2 * k)])
    split = lp_split(g, ratio=0.2, seed=5)
    E = embed_spectral(split.train_graph, 6).E
    # groups alternate within cliques so every score stratum is populated
    groups = np.arange(2 * k) % 2
    report = lp_evaluate(E, split, groups)
    assert report.utility["auroc"] > 0.9
    assert 0.0 <= report.fairness["group"]["delta_dp_lp"] <= 1.0
    assert 0.0 <= report.fairness["group"]["delta_eo_lp"] <= 1.0


def test_lp_evaluate_random_embedding_near_chance():
    rng = np.random.default_rng(41)
    n = 120
    edges = [(str(i), str(j), 1.0) for i in range(n) for j in range(i + 1, n)
             if rng.random() < 0.25]
    g = build_graph(edges, nodes=[str(i) for i in range(n)])
    split = lp_split(g, ratio=0.3, seed=6)
    E = rng.standard_normal((n, 8))
    report = lp_evaluate(E, split, rng.integers(0, 2, size=n))
    assert report.utility["auroc"] == pytest.approx(0.5, abs=0.05)


def test_lp_evaluate_constant_embedding_balanced_accuracy():
    rng = np.random.default_rng(43)
    n = 40
    edges = [(str(i), str(j), 1.0) for i in range(n) for j in range(i + 1, n)
             if rng.random() < 0.2]
    g = build_graph(edges, nodes=[str(i) for i in range(n)])
    split = lp_split(g, ratio=0.3, seed=8)
    E = np.ones((n, 4))
    report = lp_evaluate(E, split, rng.integers(0, 2, size=n))
    assert report.utility["accuracy"] == 0.5
    assert report.utility["auroc"] == 0.5
    with pytest.raises(InputError):
        lp_evaluate(E[:-1], split, np.zeros(n - 1, dtype=int))


def test_labels_round_trip(tmp_path):
    path = tmp_path / "labels.csv"
    labels = {"a": "1", "b": "0", "c": "2"}
    write_labels(path, labels)
    assert read_labels(path) == labels
    bad = tmp_path / "bad.csv"
    bad.write_text("id,label\na,1\n")
    with pytest.raises(InputError):
        read_labels(bad)


def test_write_summary(tmp_path):
    path = tmp_path / "summary.csv"
    write_summary(path, {"auroc": [0.5, 0.7], "accuracy": [1.0, 1.0]})
    lines = path.read_text().splitlines()
    assert lines[0] == "metric,mean,std"
    assert lines[1] == "accuracy,1.0,0.0"
    assert lines[2].startswith("auroc,") and "0.6" in lines[2]
