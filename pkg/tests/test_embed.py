import numpy as np
import pytest

from fairlift.embed import (EmbedderConfig, Embedding, embed, embed_deepwalk,
                            embed_spectral, l2_normalize_rows, read_embedding,
                            write_embedding)
from fairlift.errors import InputError, NumericError, ZeroMassRow
from fairlift.graph import build_graph, normalized_adjacency


def two_cliques(k=6):
    """Two disjoint k-cliques joined by nothing."""
    edges = []
    for base in (0, k):
        for i in range(k):
            for j in range(i + 1, k):
                edges.append((str(base + i), str(base + j), 1.0))
    return build_graph(edges)


def mean_cosines(E, k):
    En = E / np.linalg.norm(E, axis=1, keepdims=True)
    sims = En @ En.T
    n = E.shape[0]
    intra, inter = [], []
    for i in range(n):
        for j in range(i + 1, n):
            (intra if (i < k) == (j < k) else inter).append(sims[i, j])
    return float(np.mean(intra)), float(np.mean(inter))


def test_spectral_k2_oracle():
    g = build_graph([("a", "b", 1.0)])
    emb = embed_spectral(g, 2)
    # normalized adjacency with self-loops = [[.5,.5],[.5,.5]]: eigenvalues 1, 0
    assert emb.E[:, 0] == pytest.approx([1 / np.sqrt(2)] * 2, abs=1e-12)
    assert emb.E[:, 1] == pytest.approx([0.0, 0.0], abs=1e-12)


def test_spectral_gram_matches_clamped_eigensum():
    rng = np.random.default_rng(19)
    edges = [(str(i), str(j), float(rng.integers(1, 4)))
             for i in range(8) for j in range(i + 1, 8) if rng.random() < 0.6]
    g = build_graph(edges, nodes=[str(i) for i in range(8)])
    if np.any(g.degree == 0.0):
        pytest.skip("resample needed; seed kept all degrees positive")
    emb = embed_spectral(g, g.n)
    P = normalized_adjacency(g, add_self_loops=True).toarray()
    vals, vecs = np.linalg.eigh(P)
    keep = vals > 0
    ref = (vecs[:, keep] * vals[keep]) @ vecs[:, keep].T
    assert np.allclose(emb.E @ emb.E.T, ref, atol=1e-8)


def test_spectral_size_limits():
    big = build_graph([], nodes=[str(i) for i in range(5001)])
    with pytest.raises(InputError):
        embed_spectral(big, 4)
    small = build_graph([("a", "b", 1.0)])
    with pytest.raises(InputError):
        embed_spectral(small, 3)


def test_spectral_deterministic_and_clique_homophily():
    g = two_cliques()
    a = embed_spectral(g, 4)
    b = embed_spectral(g, 4)
    assert np.array_equal(a.E, b.E)
    intra, inter = mean_cosines(a.E, 6)
    assert intra > inter


def test_embed_dispatch():
    g = build_graph([("a", "b", 1.0), ("b", "c", 1.0)])
    emb = embed(g, EmbedderConfig(kind="spectral", d=2))
    assert emb.E.shape == (3, 2)
    with pytest.raises(InputError):
        embed(g, EmbedderConfig(kind="node2vec", d=2))
    with pytest.raises(InputError):
        embed(build_graph([]), EmbedderConfig(d=1))


def test_embedder_config_validation():
    with pytest.raises(InputError):
        EmbedderConfig(d=0)
    with pytest.raises(InputError):
        EmbedderConfig(walk_length=0)
    with pytest.raises(InputError):
        EmbedderConfig(initial_lr=0.0)


def test_deepwalk_shape_and_determinism():
    rng = np.random.default_rng(43)
    edges = [(str(i), str(j), 1.0)
             for i in range(30) for j in range(i + 1, 30) if rng.random() < 0.2]
    g = build_graph(edges, nodes=[str(i) for i in range(30)])
    cfg = EmbedderConfig(kind="deepwalk", d=16, seed=5, walks_per_node=4,
                         walk_length=20, window=4, negatives=3)
    a = embed(g, cfg)
    b = embed(g, cfg)
    assert a.E.shape == (30, 16)
    assert np.all(np.isfinite(a.E))
    assert np.array_equal(a.E, b.E)
    c = embed_deepwalk(g, cfg, seed=6)
    assert not np.array_equal(a.E, c.E)


def test_deepwalk_clique_homophily():
    g = two_cliques()
    cfg = EmbedderConfig(kind="deepwalk", d=8, seed=1, walks_per_node=8,
                         walk_length=20, window=4, negatives=4, epochs=2)
    emb = embed(g, cfg)
    intra, inter = mean_cosines(emb.E, 6)
    assert intra > inter


def test_deepwalk_isolated_row_stays_at_init_scale():
    g = build_graph([("a", "b", 1.0), ("b", "c", 1.0)], nodes=["a", "b", "c", "x"])
    d = 8
    cfg = EmbedderConfig(kind="deepwalk", d=d, seed=3, walks_per_node=6,
                         walk_length=10, window=3, negatives=3, epochs=2)
    emb = embed(g, cfg)
    # init entries are uniform in [-0.5/d, 0.5/d); a row with no positive
    # updates cannot exceed the exact init norm bound
    iso = g.index_of("x")
    assert np.linalg.norm(emb.E[iso]) <= 0.5 / np.sqrt(d)


def test_deepwalk_loss_non_increasing_median():
    g = two_cliques(5)
    deltas = []
    for seed in range(5):
        cfg = EmbedderConfig(kind="deepwalk", d=8, seed=seed, walks_per_node=6,
                             walk_length=15, window=3, negatives=4, epochs=4)
        emb = embed(g, cfg)
        loss = emb.training_loss
        assert loss.shape == (4,)
        assert np.all(np.isfinite(loss))
        deltas.append(loss[-1] - loss[0])
    assert np.median(deltas) < 0.0


def test_embedding_validation():
    with pytest.raises(InputError):
        Embedding(np.zeros((3, 2)), 4)
    with pytest.raises(NumericError):
        Embedding(np.array([[np.nan, 0.0]]), 2)
    with pytest.raises(NumericError):
        Embedding(np.array([[2.0, 0.0]]), 2, normalized=True)
    Embedding(np.array([[1.0, 0.0]]), 2, normalized=True)


def test_l2_normalize_rows():
    M = np.array([[3.0, 4.0], [0.5, 0.0]])
    out = l2_normalize_rows(M)
    assert np.allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)
    assert out[0].tolist() == [0.6, 0.8]
    with pytest.raises(ZeroMassRow):
        l2_normalize_rows(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_embedding_file_round_trip(tmp_path):
    rng = np.random.default_rng(47)
    emb = Embedding(rng.standard_normal((5, 3)), 3)
    path = tmp_path / "emb.txt"
    write_embedding(path, emb, node_names=["n0", "n1", "n2", "n3", "n4"])
    loaded, names = read_embedding(path)
    assert names == ["n0", "n1", "n2", "n3", "n4"]
    assert np.array_equal(loaded.E, emb.E)  # repr floats are lossless
    assert loaded.normalized is False


def test_embedding_round_trip_detects_normalized(tmp_path):
    rng = np.random.default_rng(53)
    E = l2_normalize_rows(rng.standard_normal((4, 6)))
    path = tmp_path / "emb.txt"
    write_embedding(path, Embedding(E, 6, normalized=True))
    loaded, names = read_embedding(path)
    assert loaded.normalized is True
    assert names == ["0", "1", "2", "3"]


def test_embedding_file_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("3\n")
    with pytest.raises(InputError):
        read_embedding(bad)
    bad.write_text("1 3\nn0 0.5 0.25\n")
    with pytest.raises(InputError):
        read_embedding(bad)
