import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intradisc.corpus import FixtureParams, generate_fixture, split_random
from intradisc.corpus.types import AnnotatedSentence
from intradisc.encoder import (
    PAD,
    UNK,
    ContextualLookupError,
    EncoderConfigError,
    VectorFormatError,
    bilstm_encode,
    bilstm_encode_backward,
    bilstm_forward,
    build_vocab,
    encode_parse,
    fuse_features,
    init_lstm,
    load_contextual_vectors,
    load_pretrained_vectors,
    pad_ids,
    save_contextual_vectors,
)

from oracles import numeric_grad, reference_bilstm, rel_error


def _params(rng, vocab=7, d=3, hidden=2, prefix="enc", embed_key="embed"):
    p = {embed_key: rng.normal(0, 0.5, (vocab, d))}
    init_lstm(p, prefix + ".fwd", d, hidden, rng)
    init_lstm(p, prefix + ".bwd", d, hidden, rng)
    for k in list(p):
        if k.endswith(".b"):
            p[k] = p[k] + rng.normal(0, 0.3, p[k].shape)
    return p


# ---------------------------------------------------------------- vocabulary


def test_vocab_small_stream():
    v = build_vocab(["a", "b", "a"], cap=10)
    assert v.itos == [PAD, UNK, "a", "b"]
    assert v.id("zzz") == v.unk_id


def test_vocab_cap_one():
    v = build_vocab(["b", "a", "b", "c"], cap=1)
    assert v.itos[2:] == ["b"]


def test_vocab_ties_are_lexicographic():
    v = build_vocab(["c", "b", "a", "c", "b", "a"], cap=2)
    assert v.itos[2:] == ["a", "b"]


def test_vocab_ids_are_dense():
    v = build_vocab([f"t{i % 13}" for i in range(100)])
    assert sorted(v.stoi.values()) == list(range(len(v)))


def test_oov_rate_matches_recount():
    fx = generate_fixture(0, FixtureParams(n_sentences=200, vocab_size=400))
    tr, _, te = split_random(fx.sentences, seed=0)
    v = build_vocab((t for s in tr for t in s.tokens), cap=150)
    seen = {t for t in v.itos[2:]}
    held = [t for s in te for t in s.tokens]
    expected = sum(t not in seen for t in held)
    got = sum(int(i) == v.unk_id for i in v.ids(held))
    assert got == expected > 0


# ---------------------------------------------------------------- pretrained vectors


def _write_vectors(path, rows):
    path.write_text("\n".join(" ".join([tok] + [repr(float(x)) for x in vec]) for tok, vec in rows) + "\n")


def test_pretrained_full_coverage(tmp_path):
    v = build_vocab(["x", "y"])
    rng = np.random.default_rng(0)
    rows = [(t, rng.normal(size=4)) for t in v.itos]
    _write_vectors(tmp_path / "v.txt", rows)
    table = load_pretrained_vectors(tmp_path / "v.txt", v, dim=4)
    np.testing.assert_array_equal(table.weights, np.array([r for _, r in rows]))


def test_pretrained_width_mismatch(tmp_path):
    v = build_vocab(["x"])
    _write_vectors(tmp_path / "v.txt", [("x", np.zeros(50))])
    with pytest.raises(VectorFormatError):
        load_pretrained_vectors(tmp_path / "v.txt", v, dim=100)


def test_pretrained_ragged_rows(tmp_path):
    v = build_vocab(["x", "y"])
    (tmp_path / "v.txt").write_text("x 1 2 3\ny 1 2\n")
    with pytest.raises(VectorFormatError, match=":2:"):
        load_pretrained_vectors(tmp_path / "v.txt", v, dim=3)


def test_pretrained_partial_coverage_is_deterministic(tmp_path):
    v = build_vocab(["a", "b", "c", "d"])
    _write_vectors(tmp_path / "v.txt", [("a", np.ones(5)), ("c", 2 * np.ones(5))])
    t1 = load_pretrained_vectors(tmp_path / "v.txt", v, dim=5, seed=3).weights
    t2 = load_pretrained_vectors(tmp_path / "v.txt", v, dim=5, seed=3).weights
    np.testing.assert_array_equal(t1, t2)
    np.testing.assert_array_equal(t1[v.id("a")], np.ones(5))
    assert np.all(np.abs(t1[v.id("b")]) <= 0.05)


# ---------------------------------------------------------------- BiLSTM forward


def test_zero_weights_give_zero_states():
    rng = np.random.default_rng(0)
    p = _params(rng)
    for k in p:
        if k != "embed":
            p[k] = np.zeros_like(p[k])
    H, _ = bilstm_encode(p, [1, 2, 3])
    assert H.shape == (3, 4) and np.all(H == 0)


def test_length_one_sequence():
    rng = np.random.default_rng(1)
    p = _params(rng)
    H, _ = bilstm_encode(p, [4])
    ref = reference_bilstm(p, "enc", p["embed"][[4]])
    np.testing.assert_allclose(H, ref, atol=1e-14)


def test_matches_reference_lstm():
    rng = np.random.default_rng(2)
    p = _params(rng, d=3, hidden=2)
    ids = [1, 5, 2, 6]
    H, _ = bilstm_encode(p, ids)
    np.testing.assert_allclose(H, reference_bilstm(p, "enc", p["embed"][ids]), atol=1e-13)


@given(lengths=st.lists(st.integers(1, 6), min_size=1, max_size=4), seed=st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_padded_batch_equals_individual_runs(lengths, seed):
    rng = np.random.default_rng(seed)
    p = _params(rng)
    seqs = [rng.integers(0, 7, n) for n in lengths]
    ids, lens = pad_ids(seqs, 0)
    H, _ = bilstm_forward(p, "enc", p["embed"][ids], lens)
    for b, s in enumerate(seqs):
        single, _ = bilstm_encode(p, s)
        np.testing.assert_allclose(H[b, : len(s)], single, atol=1e-13)


def test_reversal_swaps_directions():
    rng = np.random.default_rng(3)
    p = _params(rng)
    for w in ("Wx", "Wh", "b"):
        p[f"enc.bwd.{w}"] = p[f"enc.fwd.{w}"].copy()
    ids = [1, 2, 3, 4, 5]
    H, _ = bilstm_encode(p, ids)
    Hr, _ = bilstm_encode(p, ids[::-1])
    np.testing.assert_allclose(Hr[:, :2], H[::-1, 2:], atol=1e-14)
    np.testing.assert_allclose(Hr[:, 2:], H[::-1, :2], atol=1e-14)


# ---------------------------------------------------------------- BiLSTM backward


def test_zero_output_gradient_gives_zero_grads():
    rng = np.random.default_rng(4)
    p = _params(rng)
    H, cache = bilstm_encode(p, [1, 2, 3])
    grads = bilstm_encode_backward(p, np.zeros_like(H), cache)
    assert all(np.all(g == 0) for g in grads.values())


def _check_fd(p, ids, weights):
    def loss():
        H, _ = bilstm_encode(p, ids)
        return float((H * weights).sum())

    H, cache = bilstm_encode(p, ids)
    grads = bilstm_encode_backward(p, weights, cache)
    assert set(grads) == set(p)
    for k in p:
        assert rel_error(grads[k], numeric_grad(loss, p[k])) < 1e-4, k


def test_single_token_sum_loss_gradients():
    rng = np.random.default_rng(5)
    p = _params(rng)
    _check_fd(p, [3], np.ones((1, 4)))


def test_five_token_random_loss_gradients():
    rng = np.random.default_rng(6)
    p = _params(rng, d=3, hidden=4)
    _check_fd(p, [1, 2, 6, 2, 0], rng.normal(size=(5, 8)))


# ---------------------------------------------------------------- parse encoder and fusion


def test_encode_parse_zero_weights():
    rng = np.random.default_rng(7)
    p = _params(rng, prefix="parse", embed_key="parse_embed")
    for k in p:
        if k != "parse_embed":
            p[k] = np.zeros_like(p[k])
    assert np.all(encode_parse(p, [1, 2, 3]) == 0)


def test_encode_parse_matches_reference_and_is_pure():
    rng = np.random.default_rng(8)
    p = _params(rng, prefix="parse", embed_key="parse_embed")
    ids = [0, 3, 2, 5, 1]
    v = encode_parse(p, ids)
    ref = reference_bilstm(p, "parse", p["parse_embed"][ids])
    np.testing.assert_allclose(v, np.concatenate([ref[-1, :2], ref[0, 2:]]), atol=1e-13)
    np.testing.assert_array_equal(v, encode_parse(p, list(ids)))


def test_encode_parse_empty_rejected():
    rng = np.random.default_rng(9)
    p = _params(rng, prefix="parse", embed_key="parse_embed")
    with pytest.raises(EncoderConfigError):
        encode_parse(p, [])


def test_fuse_zero_width_is_identity():
    h = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(fuse_features(h, np.zeros(0)), h)
    np.testing.assert_array_equal(fuse_features(h, None), h)


def test_fuse_broadcasts_parse_vector():
    h = np.arange(12.0).reshape(3, 4)
    out = fuse_features(h, np.array([7.0, 8.0]))
    assert out.shape == (3, 6)
    assert np.all(out[:, 4:] == [7.0, 8.0])


@given(n=st.integers(1, 6), w=st.integers(1, 5), pw=st.integers(1, 4), seed=st.integers(0, 999))
@settings(max_examples=40, deadline=None)
def test_fuse_reconstructs_inputs(n, w, pw, seed):
    rng = np.random.default_rng(seed)
    h, pv = rng.normal(size=(n, w)), rng.normal(size=pw)
    out = fuse_features(h, pv)
    np.testing.assert_array_equal(out[:, :w], h)
    for row in out[:, w:]:
        np.testing.assert_array_equal(row, pv)
    batched = fuse_features(h[None], pv[None])
    np.testing.assert_array_equal(batched[0], out)


def test_fuse_batch_mismatch_rejected():
    with pytest.raises(ValueError):
        fuse_features(np.zeros((2, 3, 4)), np.zeros((3, 2)))


# ---------------------------------------------------------------- contextual vectors


def test_contextual_round_trip_bitwise(tmp_path):
    fx = generate_fixture(0, FixtureParams(n_sentences=20)).sentences
    rng = np.random.default_rng(0)
    vecs = {s.key: rng.normal(size=(len(s.tokens), 6)) for s in fx}
    save_contextual_vectors(tmp_path / "ctx.jsonl", vecs)
    loaded = load_contextual_vectors(tmp_path / "ctx.jsonl", fx)
    assert loaded.dim == 6
    for s in fx:
        assert np.array_equal(loaded.for_sentence(s), vecs[s.key])


def test_contextual_count_mismatch_names_sentence(tmp_path):
    s = AnnotatedSentence("docA", 4, ("a", "b", "c"))
    save_contextual_vectors(tmp_path / "ctx.jsonl", {s.key: np.zeros((2, 3))})
    with pytest.raises(VectorFormatError, match="docA/4"):
        load_contextual_vectors(tmp_path / "ctx.jsonl", [s])


def test_contextual_missing_key(tmp_path):
    save_contextual_vectors(tmp_path / "ctx.jsonl", {("d", 0): np.zeros((1, 3))})
    ctx = load_contextual_vectors(tmp_path / "ctx.jsonl")
    with pytest.raises(ContextualLookupError):
        ctx.for_sentence(AnnotatedSentence("d", 1, ("x",)))
