import math

import numpy as np
import pytest

from stylener.corpus import BioTag, NerCorpus, ParallelPair, TaggedSentence, TypeRegistry
from stylener.linearize import PrefixScheme
from stylener.model import (
    ModelConfig,
    encode,
    gumbel_noise,
    init_discriminator,
    init_transfer_model,
)
from stylener.seeding import derive_rng
from stylener.train import (
    LossWeights,
    TrainConfig,
    cycle_example,
    loss_adv_discriminator,
    loss_adv_generator,
    loss_cr,
    loss_pg,
    pair_example,
    run_training,
    sgd_step,
    total_loss,
)
from stylener.vocab import EOS, Vocabulary

from .oracles import finite_difference, max_relative_error

GRAD_TOL = 1e-4


def small_setup(dim=4, seed=11):
    types = TypeRegistry(("PER", "LOC"))
    words = ("red", "blue", "green", "tall", "short", "cat", "dog")
    vocab = Vocabulary(types, words, PrefixScheme.default())
    model = init_transfer_model(ModelConfig(dim=dim, max_len=20), vocab, seed=seed)
    return types, vocab, model


def make_sentence(tokens, tags):
    return TaggedSentence(tuple(tokens), tuple(BioTag.from_string(t) for t in tags))


def check_generator_gradients(model, loss_fn, tol=GRAD_TOL):
    """loss_fn(accumulate) -> float; must be deterministic."""
    model.params.zero_grads()
    loss_fn(True)
    analytic = {k: v.copy() for k, v in model.params.grads.items()}
    numeric = finite_difference(lambda: loss_fn(False), model.params)
    err = max_relative_error(analytic, numeric)
    assert err < tol, f"max relative gradient error {err:.3e}"


class TestPgGradients:
    def test_all_parameters(self):
        _, vocab, model = small_setup()
        pair = ParallelPair(
            make_sentence(["red", "cat"], ["O", "B-PER"]),
            make_sentence(["blue", "dog"], ["O", "B-PER"]),
            has_ner=True,
        )
        ex = pair_example(pair, vocab)
        check_generator_gradients(
            model, lambda acc: loss_pg(model, ex.src_in, ex.tgt_out, accumulate=acc)
        )

    def test_tied_embeddings_variant(self):
        types = TypeRegistry(("PER",))
        vocab = Vocabulary(types, ("red", "blue", "cat"), PrefixScheme.default())
        model = init_transfer_model(
            ModelConfig(dim=3, max_len=16, tie_embeddings=True), vocab, seed=2
        )
        pair = ParallelPair(
            make_sentence(["red"], ["O"]), make_sentence(["blue", "cat"], ["O", "O"])
        )
        ex = pair_example(pair, vocab)
        check_generator_gradients(
            model, lambda acc: loss_pg(model, ex.src_in, ex.tgt_out, accumulate=acc)
        )

    def test_rejects_unk_target(self):
        _, vocab, model = small_setup()
        from stylener.model import ModelError
        from stylener.vocab import UNK

        with pytest.raises(ModelError):
            loss_pg(model, vocab.encode(["red"]), np.array([UNK, EOS]))


class TestCrGradients:
    def test_all_parameters(self):
        _, vocab, model = small_setup()
        ex = cycle_example(make_sentence(["red", "cat"], ["O", "B-LOC"]), "source", vocab)
        steps = 3
        noises = gumbel_noise((steps, len(vocab)), derive_rng(0, "cr_noise"))
        check_generator_gradients(
            model,
            lambda acc: loss_cr(
                model, ex, tau=1.0, max_steps=steps, noises=noises,
                fixed_steps=steps, accumulate=acc,
            ),
        )

    def test_copying_model_reconstructs_cheaply(self):
        # sanity: training pg on an identity pair drives cr for that
        # sentence down, showing the reconstruction target is reachable
        _, vocab, model = small_setup(dim=6)
        s = make_sentence(["red", "cat"], ["O", "O"])
        ex_pair = pair_example(ParallelPair(s, s, has_ner=False), vocab)
        before = loss_pg(model, ex_pair.src_in, ex_pair.tgt_out, accumulate=False)
        for _ in range(300):
            model.params.zero_grads()
            loss_pg(model, ex_pair.src_in, ex_pair.tgt_out)
            sgd_step(model.params, 0.3, 0.0)
        after = loss_pg(model, ex_pair.src_in, ex_pair.tgt_out, accumulate=False)
        assert after < 0.15 * before and after < 0.5


class TestAdvGradients:
    def test_discriminator_parameters(self):
        _, _, model = small_setup()
        disc = init_discriminator(model.config, seed=7)
        rng = derive_rng(1, "latents")
        src = [rng.normal(size=(5, model.config.dim)) for _ in range(2)]
        tgt = [rng.normal(size=(4, model.config.dim)) for _ in range(2)]
        disc.zero_grads()
        loss_adv_discriminator(disc, src, tgt)
        analytic = {k: v.copy() for k, v in disc.grads.items()}
        numeric = finite_difference(
            lambda: loss_adv_discriminator(disc, src, tgt, accumulate=False), disc
        )
        assert max_relative_error(analytic, numeric) < GRAD_TOL

    def test_generator_parameters_through_sampling(self):
        _, vocab, model = small_setup(dim=3)
        disc = init_discriminator(model.config, seed=5)
        src_in = [vocab.encode(["transfer", "red", "cat"])]
        tgt_in = [vocab.encode(["transfer", "blue"])]
        check_generator_gradients(
            model,
            lambda acc: loss_adv_generator(
                model, disc, src_in, tgt_in, tau=1.0, max_steps=3, seed=21,
                accumulate=acc,
            ),
        )

    def test_discriminator_bce_value(self):
        # a discriminator scoring s on sources and t on targets pays
        # -log(s) - log(1-t) averaged per side
        _, _, model = small_setup()
        disc = init_discriminator(model.config, seed=0)
        disc.tensors["w"][...] = 0.0  # score exactly 0.5 everywhere
        rng = derive_rng(2, "latents")
        src = [rng.normal(size=(3, model.config.dim))]
        tgt = [rng.normal(size=(3, model.config.dim))]
        value = loss_adv_discriminator(disc, src, tgt, accumulate=False)
        assert abs(value - 2 * math.log(2)) < 1e-12


class TestTotalLoss:
    def test_weighted_sum_and_gradients(self):
        _, vocab, model = small_setup()
        weights = LossWeights(paraphrase=1.0, cycle=0.5, adversarial=1.25)
        pair = ParallelPair(
            make_sentence(["red", "cat"], ["O", "O"]),
            make_sentence(["blue"], ["O"]),
        )
        ex = pair_example(pair, vocab)
        cyc = cycle_example(make_sentence(["tall", "dog"], ["O", "O"]), "target", vocab)
        steps = 3
        noises = gumbel_noise((steps, len(vocab)), derive_rng(3, "n"))
        disc = init_discriminator(model.config, seed=9)
        src_in = [vocab.encode(["transfer", "green"])]
        tgt_in = [vocab.encode(["transfer", "short"])]

        def combined(acc):
            pg = loss_pg(model, ex.src_in, ex.tgt_out, scale=weights.paraphrase,
                         accumulate=acc)
            cr = loss_cr(model, cyc, tau=1.0, max_steps=steps, noises=noises,
                         fixed_steps=steps, scale=weights.cycle, accumulate=acc)
            adv = loss_adv_generator(model, disc, src_in, tgt_in, tau=1.0,
                                     max_steps=steps, seed=31,
                                     scale=weights.adversarial, accumulate=acc)
            return total_loss(pg, cr, adv, weights)

        check_generator_gradients(model, combined)

    def test_total_is_linear_in_terms(self):
        w = LossWeights(1.0, 0.5, 1.25)
        assert total_loss(2.0, 4.0, 8.0, w) == pytest.approx(2.0 + 2.0 + 10.0)


class TestSgd:
    def test_decoupled_weight_decay(self):
        from stylener.model import ParamSet

        params = ParamSet({"w": np.array([2.0, -4.0])})
        params.grads["w"][:] = np.array([1.0, 1.0])
        sgd_step(params, learning_rate=0.1, weight_decay=0.01)
        # decoupled: w <- w - lr*g - lr*wd*w
        np.testing.assert_allclose(
            params["w"], [2.0 - 0.1 - 0.1 * 0.01 * 2.0, -4.0 - 0.1 + 0.1 * 0.01 * 4.0]
        )

    def test_grad_clip_rescales_global_norm(self):
        from stylener.model import ParamSet

        params = ParamSet({"a": np.zeros(3), "b": np.zeros(4)})
        params.grads["a"][:] = 3.0
        params.grads["b"][:] = 4.0
        norm = math.sqrt((9.0 * 3) + (16.0 * 4))
        sgd_step(params, learning_rate=1.0, weight_decay=0.0, grad_clip=1.0)
        np.testing.assert_allclose(params["a"], -(3.0 / norm) * np.ones(3))

    def test_zero_clip_disables(self):
        from stylener.model import ParamSet

        params = ParamSet({"a": np.zeros(2)})
        params.grads["a"][:] = 100.0
        sgd_step(params, 1.0, 0.0, grad_clip=0.0)
        np.testing.assert_allclose(params["a"], -100.0 * np.ones(2))


class TestRunTraining:
    def _data(self, n_pairs=6):
        types = TypeRegistry(("PER",))
        words = ["aa", "bb", "cc", "dd"]
        rng = derive_rng(4, "data")
        pairs, src_sents, tgt_sents = [], [], []
        for i in range(n_pairs):
            toks = tuple(words[int(rng.integers(4))] for _ in range(3))
            s = make_sentence(toks, ["O"] * 3)
            pairs.append(ParallelPair(s, make_sentence(toks[::-1], ["O"] * 3)))
            src_sents.append(make_sentence((words[i % 4],), ["O"]))
            tgt_sents.append(make_sentence((words[(i + 1) % 4], "aa"), ["O", "O"]))
        vocab = Vocabulary(types, words, PrefixScheme.default())
        src = NerCorpus(tuple(src_sents), "source", types)
        tgt = NerCorpus(tuple(tgt_sents), "target", types)
        return pairs, src, tgt, vocab

    def test_deterministic_and_staged(self):
        pairs, src, tgt, vocab = self._data()
        mc = ModelConfig(dim=4, max_len=16)
        tc = TrainConfig(learning_rate=0.05, epochs=4, batch_size=3, seed=8)
        a = run_training(pairs, src, tgt, vocab, mc, tc, LossWeights())
        b = run_training(pairs, src, tgt, vocab, mc, tc, LossWeights())
        assert a.report.pg_trace == b.report.pg_trace
        assert a.report.stage2_start_epoch == 2  # ceil(4/2)
        records = a.report.epoch_records()
        assert [r["stage"] for r in records] == [1, 2, 2, 2]
        assert all(r["cr"] == 0.0 for r in records if r["stage"] == 1)
        assert any(r["cr"] > 0.0 for r in records if r["stage"] == 2)
        for name in a.model.params.tensors:
            np.testing.assert_array_equal(a.model.params[name], b.model.params[name])

    def test_pg_decreases_on_easy_data(self):
        pairs, src, tgt, vocab = self._data(8)
        mc = ModelConfig(dim=8, max_len=16)
        tc = TrainConfig(learning_rate=0.3, epochs=6, batch_size=4, seed=1,
                         grad_clip=5.0)
        result = run_training(pairs, src, tgt, vocab, mc, tc, LossWeights())
        trace = result.report.pg_trace
        assert trace[-1] < trace[0]

    def test_stage2_override(self):
        pairs, src, tgt, vocab = self._data()
        tc = TrainConfig(learning_rate=0.05, epochs=3, batch_size=3, stage2_start=3)
        result = run_training(pairs, src, tgt, vocab, ModelConfig(dim=4), tc, LossWeights())
        assert [r["stage"] for r in result.report.epoch_records()] == [1, 1, 2]

    def test_empty_pairs_rejected(self):
        _, src, tgt, vocab = self._data()
        with pytest.raises(ValueError):
            run_training([], src, tgt, vocab, ModelConfig(dim=4),
                         TrainConfig(epochs=1), LossWeights())
