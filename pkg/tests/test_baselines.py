import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ALPHAS
from dmcquant.baselines import (
    SuperSymbol,
    combine_loss,
    greedy_combining,
    greedy_combining_heap,
    kl_matrix,
    kl_means,
    run_gc,
    run_kl_means,
)
from dmcquant.channel import Channel, PamSpec, bsc, discretize_pam
from dmcquant.cost import CostFamily, SegmentCostView, dq_cost, mi_gap
from dmcquant.dp import dp_standard
from dmcquant.oracle import exhaustive_dq, random_channel
from dmcquant.quantizer import Assignment

# 1 - h(0.9) in bits, from a 30-digit evaluation
BSC_CAPACITY = 0.5310044064107188


def cost_of(ch, alpha=1.0):
    return CostFamily(ch.px, alpha)


class TestCombineLoss:
    def test_bsc_merge_loses_everything(self):
        ch = bsc(0.1)
        a, b = SuperSymbol.output(ch, 0), SuperSymbol.output(ch, 1)
        assert combine_loss(a, b, cost_of(ch)) == pytest.approx(BSC_CAPACITY, abs=1e-14)

    def test_proportional_columns_are_free(self):
        ch = Channel([0.5, 0.5], [[0.2, 0.4, 0.4], [0.1, 0.2, 0.7]])
        a, b = SuperSymbol.output(ch, 0), SuperSymbol.output(ch, 1)
        assert abs(combine_loss(a, b, cost_of(ch))) <= 1e-15

    def test_symmetric(self, rng):
        ch = random_channel(rng, 3, 5)
        a, b = SuperSymbol.output(ch, 1), SuperSymbol.output(ch, 3)
        c = cost_of(ch, 0.5)
        assert combine_loss(a, b, c) == combine_loss(b, a, c)

    def test_dead_symbol(self):
        ch = bsc(0.1)
        a, b = SuperSymbol.output(ch, 0), SuperSymbol.output(ch, 1)
        b.alive = False
        with pytest.raises(ValueError):
            combine_loss(a, b, cost_of(ch))

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_nonnegative(self, alpha, rng):
        for _ in range(50):
            ch = random_channel(rng, 3, 4)
            a, b = SuperSymbol.output(ch, 0), SuperSymbol.output(ch, 2)
            assert combine_loss(a, b, cost_of(ch, alpha)) >= -1e-15


class TestGreedyCombining:
    def test_single_merge_is_best_pair(self, rng):
        # with M = N - 1 GC performs exactly one merge, which must be the cheapest one
        for _ in range(10):
            ch = random_channel(rng, 3, 6)
            c = cost_of(ch)
            syms = [SuperSymbol.output(ch, j) for j in range(6)]
            losses = {(i, j): combine_loss(syms[i], syms[j], c) for i in range(6) for j in range(i + 1, 6)}
            i, j = min(losses, key=lambda k: (losses[k], k))
            res = run_gc(ch, c, 5)
            labels = res.assignment.labels
            assert labels[i] == labels[j]
            assert len(set(labels.tolist())) == 5
            assert res.stage_losses[0] == pytest.approx(losses[i, j], abs=1e-15)

    def test_heap_matches_naive(self, backend, rng):
        for _ in range(30):
            q, n = int(rng.integers(2, 5)), int(rng.integers(3, 30))
            ch = random_channel(rng, q, n)
            M = int(rng.integers(2, n))
            c = cost_of(ch, float(rng.choice(ALPHAS)))
            a, b = run_gc(ch, c, M, heap=False), run_gc(ch, c, M, heap=True)
            assert np.array_equal(a.assignment.labels, b.assignment.labels)
            assert np.array_equal(a.stage_losses, b.stage_losses)

    def test_heap_matches_naive_with_ties(self, backend, rng):
        # duplicated columns make several zero-loss pairs tie exactly
        for _ in range(20):
            base = random_channel(rng, 3, 4).pyx
            pyx = np.repeat(base, 3, axis=1) / 3
            ch = Channel(np.full(3, 1 / 3), pyx)
            for M in (2, 4, 6, 9):
                c = cost_of(ch)
                assert np.array_equal(greedy_combining(ch, c, M).labels,
                                      greedy_combining_heap(ch, c, M).labels)

    def test_canonical_labels(self, rng):
        ch = random_channel(rng, 3, 12)
        a = greedy_combining_heap(ch, cost_of(ch), 4)
        assert np.array_equal(a.labels, a.canonical().labels)
        assert a.is_surjective()

    def test_stage_losses_nonnegative(self, rng):
        ch = random_channel(rng, 4, 30)
        res = run_gc(ch, cost_of(ch), 3)
        assert res.stage_losses.shape == (27,)
        assert np.all(res.stage_losses >= -1e-15)
        # the total loss is exactly the cost increase over the identity quantizer
        c = cost_of(ch)
        full = dq_cost(c, ch.joint, Assignment.identity(30))
        assert dq_cost(c, ch.joint, res.assignment) - full == pytest.approx(res.stage_losses.sum(), abs=1e-12)

    def test_heap_evaluates_fewer_losses(self, rng):
        ch = random_channel(rng, 4, 128)
        c = cost_of(ch)
        assert run_gc(ch, c, 8, heap=True).loss_evals < run_gc(ch, c, 8, heap=False).loss_evals

    def test_never_beats_dq_optimum(self, rng):
        for _ in range(20):
            ch = random_channel(rng, 3, 7)
            c = cost_of(ch)
            ref = exhaustive_dq(SegmentCostView(ch, c), 3)
            assert dq_cost(c, ch.joint, greedy_combining_heap(ch, c, 3)) >= ref.cost - 1e-12

    def test_arguments(self):
        ch = random_channel(np.random.default_rng(0), 2, 5)
        with pytest.raises(ValueError):
            run_gc(ch, cost_of(ch), 5)
        with pytest.raises(ValueError):
            run_gc(ch, CostFamily(np.full(3, 1 / 3)), 3)


class TestKlMatrix:
    def test_zero_on_diagonal(self, rng):
        delta = random_channel(rng, 3, 5).posteriors
        D = kl_matrix(delta, delta)
        assert np.allclose(np.diag(D), 0.0, atol=1e-15)
        assert np.all(D >= -1e-15)

    def test_support_mismatch(self):
        D = kl_matrix(np.array([[0.5, 0.5]]), np.array([[1.0, 0.0], [0.5, 0.5]]))
        assert np.isinf(D[0, 0]) and D[0, 1] == 0.0

    def test_zero_mass_ignored(self):
        D = kl_matrix(np.array([[1.0, 0.0]]), np.array([[0.5, 0.5]]))
        assert D[0, 0] == pytest.approx(np.log(2.0))


class TestKlMeans:
    def test_separated_clusters(self):
        # two tight groups of posteriors; any sensible clustering splits them
        pyx = np.array([[0.3, 0.3, 0.3, 0.03, 0.03, 0.04],
                        [0.03, 0.03, 0.04, 0.3, 0.3, 0.3]])
        ch = Channel([0.5, 0.5], pyx)
        res = run_kl_means(ch, 2, restarts=5, iters=20)
        assert res.assignment.labels.tolist() == [0, 0, 0, 1, 1, 1]

    def test_M_equals_N(self, rng):
        ch = random_channel(rng, 3, 6)
        a = kl_means(ch, 6, restarts=3, iters=10)
        assert a.same_partition(Assignment.identity(6))

    def test_deterministic(self, rng):
        ch = random_channel(rng, 3, 20)
        a = run_kl_means(ch, 4, restarts=10, iters=30, seed=5)
        b = run_kl_means(ch, 4, restarts=10, iters=30, seed=5)
        assert np.array_equal(a.assignment.labels, b.assignment.labels)
        assert a.objectives == b.objectives and a.best_restart == b.best_restart

    def test_restart_independent_of_count(self, rng):
        # restart k has its own stream, so the first runs agree when more restarts are added
        ch = random_channel(rng, 3, 20)
        a = run_kl_means(ch, 4, restarts=3, iters=30, seed=1)
        b = run_kl_means(ch, 4, restarts=8, iters=30, seed=1)
        assert a.objectives == b.objectives[:3]
        assert b.gap <= a.gap

    def test_objective_monotone(self, rng):
        for _ in range(10):
            ch = random_channel(rng, 4, 30)
            res = run_kl_means(ch, 5, restarts=5, iters=50, seed=int(rng.integers(1000)))
            for h in res.objectives:
                assert all(b <= a + 1e-12 for a, b in zip(h, h[1:]))

    def test_surjective_and_gap(self, rng):
        for _ in range(10):
            ch = random_channel(rng, 3, 15)
            res = run_kl_means(ch, 6, restarts=4, iters=30, seed=0)
            assert res.assignment.is_surjective()
            assert res.gap == pytest.approx(mi_gap(ch, res.assignment), abs=1e-15)
            assert res.gap >= -1e-15

    def test_duplicate_posteriors_handled(self):
        # five identical posteriors and M = 3 forces empty clusters to be reseeded
        pyx = np.array([[0.1] * 5 + [0.25, 0.25], [0.1] * 5 + [0.05, 0.45]])
        pyx /= pyx.sum(axis=1, keepdims=True)
        ch = Channel([0.5, 0.5], pyx)
        res = run_kl_means(ch, 3, restarts=5, iters=20)
        assert res.assignment.is_surjective()

    def test_arguments(self):
        ch = random_channel(np.random.default_rng(0), 2, 5)
        with pytest.raises(ValueError):
            run_kl_means(ch, 6)
        with pytest.raises(ValueError):
            run_kl_means(ch, 2, restarts=0)


def test_pam_ordering():
    # on a dominance-ordered channel the optimal SDQ is at least as good as both heuristics
    ch = discretize_pam(PamSpec.standard(4, 1.0, 48))
    c = cost_of(ch)
    view = SegmentCostView(ch, c)
    for M in (3, 6, 10):
        opt = Assignment.from_boundaries(dp_standard(view, M).boundaries)
        g = mi_gap(ch, opt)
        assert g <= mi_gap(ch, greedy_combining_heap(ch, c, M)) + 1e-9
        assert g <= mi_gap(ch, kl_means(ch, M, restarts=5, iters=30)) + 1e-9


@settings(max_examples=60, deadline=None)
@given(q=st.integers(2, 4), n=st.integers(3, 40), seed=st.integers(0, 2**32 - 1),
       alpha=st.sampled_from(ALPHAS), data=st.data())
def test_heap_equals_naive_property(q, n, seed, alpha, data):
    M = data.draw(st.integers(2, n - 1))
    ch = random_channel(np.random.default_rng(seed), q, n)
    c = cost_of(ch, alpha)
    assert np.array_equal(greedy_combining(ch, c, M).labels, greedy_combining_heap(ch, c, M).labels)
