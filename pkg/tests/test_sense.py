import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from intradisc.corpus import NUM_SENSES, SENSE_INDEX, SENSES, FixtureParams, generate_d2, generate_fixture
from intradisc.corpus.types import SenseLabel
from intradisc.encoder import CLS, SEP, SPECIALS, ContextualVectors, build_vocab
from intradisc.network import EncoderConfig
from intradisc.sense import (
    SensePair,
    accuracy,
    build_pair_input,
    classify,
    cross_entropy,
    init_sense_model,
    inverse_frequency_weights,
    softmax,
    train_sense,
)
from intradisc.tagger import parse_vocab_for
from intradisc.training import TrainConfig

from oracles import model_grad_errors, numeric_grad, perturb, rel_error


def _d2(n_sentences=40, seed=0):
    fx = generate_fixture(seed, FixtureParams(n_sentences=n_sentences, vocab_size=20, relation_rate=1.0))
    return generate_d2(fx.sentences)


def _toy_model(examples, use_parse=False, seed=0, **cfg_kw):
    cfg = EncoderConfig(emb_dim=3, hidden=3, use_parse=use_parse, parse_emb_dim=2, parse_hidden=2, **cfg_kw)
    vocab = build_vocab((t for ex in examples for t in (*ex.arg1_tokens, *ex.arg2_tokens)), specials=SPECIALS)
    pv = parse_vocab_for([ex.parse for ex in examples], cfg.parse_mode) if use_parse else None
    model = init_sense_model(cfg, vocab, pv, seed=seed)
    perturb(model.params, np.random.default_rng(seed), 0.2)
    return model


def test_pair_input_layout():
    assert build_pair_input(["a"], ["b", "c"]) == [CLS, "a", SEP, "b", "c", SEP]


@pytest.mark.parametrize("a1,a2", [([], ["x"]), (["x"], [])])
def test_pair_input_rejects_empty(a1, a2):
    with pytest.raises(ValueError):
        build_pair_input(a1, a2)


@given(arrays(np.float64, st.tuples(st.integers(1, 4), st.just(NUM_SENSES)), elements=st.floats(-300, 300)))
@settings(max_examples=100, deadline=None)
def test_softmax_rows_sum_to_one(z):
    p = softmax(z)
    assert np.all(p >= 0)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_cross_entropy_gradient_is_softmax_minus_onehot():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(3, NUM_SENSES))
    t = np.array([0, 4, 10])
    loss, dz = cross_entropy(z, t)
    onehot = np.eye(NUM_SENSES)[t]
    np.testing.assert_allclose(dz, (softmax(z) - onehot) / 3, atol=1e-12)
    assert loss == pytest.approx(-np.mean(np.log(softmax(z)[np.arange(3), t])), abs=1e-12)
    assert rel_error(dz, numeric_grad(lambda: cross_entropy(z, t)[0], z)) < 1e-6


def test_weighted_cross_entropy_gradient():
    rng = np.random.default_rng(1)
    z = rng.normal(size=(4, NUM_SENSES))
    t = np.array([1, 1, 2, 3])
    w = rng.uniform(0.5, 2.0, NUM_SENSES)
    _, dz = cross_entropy(z, t, w)
    assert rel_error(dz, numeric_grad(lambda: cross_entropy(z, t, w)[0], z)) < 1e-6


def test_inverse_frequency_weights_balance_classes():
    d2 = _d2()
    w = inverse_frequency_weights(d2)
    counts = np.bincount([SENSE_INDEX[ex.sense] for ex in d2], minlength=NUM_SENSES)
    present = counts > 0
    mass = w[present] * counts[present]
    np.testing.assert_allclose(mass, mass[0])
    assert np.all(w[~present] == 1.0)


@pytest.mark.parametrize("use_parse", [False, True])
def test_sense_gradients_match_finite_differences(use_parse):
    ex = _d2()[:3]
    model = _toy_model(ex, use_parse)
    errs = model_grad_errors(model, ex)
    assert max(errs.values()) < 1e-4, errs


def test_class_weighted_gradients():
    d2 = _d2()
    ex = d2[:3]
    model = _toy_model(ex)
    model.class_weights = inverse_frequency_weights(d2)
    errs = model_grad_errors(model, ex)
    assert max(errs.values()) < 1e-4, errs


def test_contextual_mode_gradients():
    ex = _d2()[:2]
    rng = np.random.default_rng(2)
    vecs = {}
    for e in ex:
        n = max(s[1] for s in (*e.arg1_spans, *e.arg2_spans))
        vecs[(e.doc_id, e.sent_index)] = rng.normal(size=(n, 4))
    ctx = ContextualVectors(vecs)
    cfg = EncoderConfig(mode="contextual", contextual_path="unused", emb_dim=3, hidden=3)
    model = init_sense_model(cfg, build_vocab([], specials=SPECIALS), None, seed=0, input_dim=4)
    perturb(model.params, rng, 0.2)
    model.contextual = ctx
    errs = model_grad_errors(model, ex)
    assert max(errs.values()) < 1e-4, errs


def test_single_class_training_predicts_that_class():
    d2 = [ex for ex in _d2(80) if ex.sense == SenseLabel.CONTINGENCY_CAUSE]
    assert len(d2) >= 6
    cfg = EncoderConfig(emb_dim=8, hidden=8)
    model, _ = train_sense(d2[:-3], d2[-3:], cfg, TrainConfig(max_epochs=10, batch_size=4, learning_rate=0.05))
    assert set(model.predict(d2)) == {SenseLabel.CONTINGENCY_CAUSE}
    assert accuracy(model, d2) == 1.0


def test_training_is_deterministic():
    d2 = _d2()
    cfg = EncoderConfig(emb_dim=6, hidden=6)
    runs = [train_sense(d2[:20], d2[20:], cfg, TrainConfig(max_epochs=2, batch_size=4, seed=1))[0] for _ in range(2)]
    for k in runs[0].params:
        np.testing.assert_array_equal(runs[0].params[k], runs[1].params[k])


def test_classify_is_pure_and_normalised():
    ex = _d2()[:3]
    model = _toy_model(ex)
    d1 = classify(model, ex[0].arg1_tokens, ex[0].arg2_tokens)
    d2 = classify(model, ex[0].arg1_tokens, ex[0].arg2_tokens)
    np.testing.assert_array_equal(d1.probs, d2.probs)
    assert d1.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert d1.label == SENSES[int(np.argmax(d1.probs))]
    assert d1.certainty == pytest.approx(d1[d1.label])


def test_batched_probabilities_match_single_queries():
    ex = _d2()[:5]
    model = _toy_model(ex, use_parse=True)
    pairs = [SensePair.from_d2(e) for e in ex]
    batched = model.predict_proba(pairs)
    for row, e in zip(batched, ex):
        np.testing.assert_allclose(row, classify(model, e.arg1_tokens, e.arg2_tokens, e.parse).probs, atol=1e-12)


def test_unknown_sense_rejected():
    ex = _d2()[:4]
    bad = [ex[0].__class__(**{**ex[0].__dict__, "sense": "Bogus.Sense"})]
    with pytest.raises(ValueError):
        train_sense(bad, ex, EncoderConfig(emb_dim=4, hidden=4), TrainConfig(max_epochs=1))
