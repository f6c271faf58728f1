import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmcquant.channel import (
    Channel,
    ChannelError,
    Labeling,
    PamSpec,
    bsc,
    check_dominance,
    discretize_pam,
    dumps_channel,
    joint_prefix,
    loads_channel,
    posterior_geometry,
    read_channel,
    relabel_inputs_dominant,
    relabel_outputs_sequential,
    validate,
    write_channel,
)
from dmcquant.cost import mutual_information
from dmcquant.oracle import random_channel, random_sequential_collinear


def channel_from_posteriors(delta, py):
    joint = (np.asarray(py)[:, None] * np.asarray(delta, dtype=float)).T
    px = joint.sum(axis=1)
    return Channel(px, joint / px[:, None])


class TestValidate:
    def test_bsc_is_valid(self):
        ch = bsc(0.1)
        validate(ch)
        assert ch.q == 2 and ch.n == 2
        np.testing.assert_allclose(ch.pyx, [[0.9, 0.1], [0.1, 0.9]])

    def test_row_sum(self):
        with pytest.raises(ChannelError, match="row sum"):
            Channel([0.5, 0.5], [[0.9, 0.09], [0.1, 0.9]])

    def test_zero_output_mass(self):
        with pytest.raises(ChannelError, match="zero output mass"):
            Channel([0.5, 0.5], [[0.5, 0.0, 0.5], [0.3, 0.0, 0.7]])

    def test_prior_must_be_positive(self):
        with pytest.raises(ChannelError, match="not positive"):
            Channel([1.0, 0.0], [[0.5, 0.5], [0.5, 0.5]])

    def test_entries_in_unit_interval(self):
        with pytest.raises(ChannelError):
            Channel([0.5, 0.5], [[1.1, -0.1], [0.5, 0.5]])

    def test_arrays_are_read_only(self):
        ch = bsc(0.2)
        with pytest.raises(ValueError):
            ch.pyx[0, 0] = 0.5


class TestJointPrefix:
    def test_bsc(self):
        s = joint_prefix(bsc(0.1)).s
        np.testing.assert_allclose(s[0], [0, 0.45, 0.5])
        np.testing.assert_allclose(s[1], [0, 0.05, 0.5])

    def test_matches_double_loop(self, rng):
        for n in (5, 17, 64):
            ch = random_channel(rng, 3, n)
            s = joint_prefix(ch).s
            for i in range(ch.q):
                acc = 0.0
                assert s[i, 0] == 0.0
                for k in range(1, n + 1):
                    acc += ch.px[i] * ch.pyx[i, k - 1]
                    assert abs(s[i, k] - acc) <= 1e-14
            np.testing.assert_allclose(s[:, -1], ch.px, atol=1e-14)
            assert np.all(np.diff(s, axis=1) >= 0)


class TestGeometry:
    def test_binary_always_collinear(self, rng):
        for _ in range(20):
            assert posterior_geometry(random_channel(rng, 2, 7)).collinear

    def test_sequential_midpoint(self):
        ch = channel_from_posteriors([[1, 0, 0], [0.5, 0.25, 0.25], [0, 0.5, 0.5]], [0.3, 0.3, 0.4])
        g = posterior_geometry(ch)
        assert g.collinear and g.sequential
        np.testing.assert_allclose(g.t, [0, 0.5, 1], atol=1e-12)

    def test_out_of_order(self):
        ch = channel_from_posteriors([[1, 0, 0], [0, 0.5, 0.5], [0.5, 0.25, 0.25]], [0.3, 0.3, 0.4])
        g = posterior_geometry(ch)
        assert g.collinear and not g.sequential
        np.testing.assert_allclose(g.t, [0, 1, 0.5], atol=1e-12)
        out, lab = relabel_outputs_sequential(ch)
        assert lab.one_based() == (1, 3, 2)
        assert posterior_geometry(out).sequential

    def test_not_collinear(self):
        ch = channel_from_posteriors([[1, 0, 0], [0, 1, 0], [0, 0, 1]], [0.3, 0.3, 0.4])
        assert not posterior_geometry(ch).collinear
        with pytest.raises(ChannelError):
            relabel_outputs_sequential(ch)

    def test_degenerate(self):
        ch = Channel([0.5, 0.5], [[0.2, 0.8], [0.2, 0.8]])
        g = posterior_geometry(ch)
        assert g.degenerate and g.collinear and g.sequential
        assert np.all(g.t == 0)

    def test_line_residual(self, rng):
        ch = random_sequential_collinear(rng, 4, 9)
        g = posterior_geometry(ch)
        np.testing.assert_allclose(g.delta, g.delta[0] + np.outer(g.t, g.direction), atol=1e-9)
        np.testing.assert_allclose(g.delta.sum(axis=1), 1.0)

    def test_relabel_random_collinear_is_idempotent(self, rng):
        for _ in range(20):
            ch = random_sequential_collinear(rng, 3, 6).permute_outputs(rng.permutation(6))
            out, lab = relabel_outputs_sequential(ch)
            assert posterior_geometry(out).sequential
            again, lab2 = relabel_outputs_sequential(out)
            assert lab2.is_identity()


class TestLabeling:
    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError):
            Labeling([0, 0, 1])

    def test_inverse(self):
        lab = Labeling([2, 0, 1])
        assert lab.inverse.tolist() == [1, 2, 0]
        assert Labeling(lab.inverse).inverse.tolist() == [2, 0, 1]


class TestDominance:
    def test_bsc_identity(self):
        ch, lab, ok = relabel_inputs_dominant(bsc(0.1))
        assert ok and lab.is_identity()
        assert check_dominance(bsc(0.1))

    def test_bsc_swapped(self):
        swapped = Channel([0.5, 0.5], [[0.1, 0.9], [0.9, 0.1]])
        assert not check_dominance(swapped)
        ch, lab, ok = relabel_inputs_dominant(swapped)
        assert ok and lab.perm.tolist() == [1, 0]

    def test_pam_and_swapped_columns(self):
        ch = discretize_pam(PamSpec.standard(2, 1.0, 8))
        assert check_dominance(ch) and check_dominance(ch, strict=True)
        perm = list(range(8))
        perm[2], perm[3] = perm[3], perm[2]
        rep = check_dominance(ch.permute_outputs(perm))
        assert not rep and rep.violation == (0, 1, 2, 3)

    def test_unorderable_inputs(self, rng):
        found = 0
        for _ in range(50):
            ch = random_channel(rng, 3, 4)
            if any(check_dominance(ch.permute_inputs(p), strict=True)
                   for p in itertools.permutations(range(3))):
                continue
            found += 1
            assert relabel_inputs_dominant(ch)[2] is False
        assert found > 0

    def test_collinear_relabel_satisfies(self, rng):
        for q in (3, 4, 5):
            ch = random_sequential_collinear(rng, q, 7).permute_inputs(rng.permutation(q))
            out, lab, ok = relabel_inputs_dominant(ch)
            assert ok and check_dominance(out, strict=True)


class TestPam:
    def test_small_grid(self):
        spec = PamSpec.standard(2, 1.0, 4)
        np.testing.assert_allclose(spec.thresholds(), [-np.inf, -4, 0, 4, np.inf])
        ch = discretize_pam(spec)
        # Phi(1) - Phi(-3), from a 30-digit evaluation of the normal CDF
        assert ch.pyx[0, 1] == pytest.approx(0.8399948480369129, abs=1e-15)
        np.testing.assert_allclose(ch.pyx.sum(axis=1), 1.0, atol=1e-12)
        assert ch.meta["levels"] == [-1.0, 1.0]

    def test_minimal_grid(self):
        ch = discretize_pam(PamSpec.standard(2, 1.0, 3))
        assert ch.n == 3
        np.testing.assert_allclose(ch.pyx.sum(axis=1), 1.0, atol=1e-12)

    def test_rejects_tiny_grid(self):
        with pytest.raises(ChannelError):
            discretize_pam(PamSpec.standard(2, 1.0, 2))

    def test_large_noise_kills_information(self):
        ch = discretize_pam(PamSpec.standard(2, 1e3, 64))
        assert mutual_information(ch.joint) < 1e-4

    @pytest.mark.parametrize("q", [2, 4, 8])
    def test_dominance_holds(self, q):
        assert check_dominance(discretize_pam(PamSpec.standard(q, 1.0, 128)), strict=True)

    def test_levels(self):
        assert PamSpec.standard(4, 1.0, 10).levels == (-3.0, -1.0, 1.0, 3.0)

    def test_custom_endpoints(self):
        g = PamSpec.standard(2, 1.0, 5, lo=-2.0, hi=2.0).thresholds()
        np.testing.assert_allclose(g[1:-1], [-2, -2 / 3, 2 / 3, 2])


class TestFileFormat:
    def test_round_trip_bitwise(self, rng, tmp_path):
        ch = discretize_pam(PamSpec.standard(4, 0.7, 33))
        path = tmp_path / "c.json"
        write_channel(ch, path)
        back = read_channel(path)
        assert np.array_equal(back.px, ch.px) and np.array_equal(back.pyx, ch.pyx)
        assert back.meta["gamma"] == ch.meta["gamma"]

    def test_scientific_notation(self):
        ch = loads_channel('{"q": 2, "n": 2, "px": [5e-1, 5E-1], "pyx": [[9e-1, 1e-1], [1e-1, 9e-1]]}')
        assert ch.px[0] == 0.5

    def test_bad_documents(self):
        with pytest.raises(ChannelError, match="malformed"):
            loads_channel("{")
        with pytest.raises(ChannelError, match="lacks"):
            loads_channel('{"px": [1]}')
        with pytest.raises(ChannelError, match="declared"):
            loads_channel('{"q": 3, "px": [0.5, 0.5], "pyx": [[1, 0], [0, 1]]}')

    def test_stream(self):
        buf = io.StringIO()
        write_channel(bsc(0.25), buf)
        buf.seek(0)
        assert np.array_equal(read_channel(buf).pyx, bsc(0.25).pyx)


@settings(max_examples=60, deadline=None)
@given(q=st.integers(2, 5), n=st.integers(2, 12), seed=st.integers(0, 2**32 - 1))
def test_round_trip_property(q, n, seed):
    ch = random_channel(np.random.default_rng(seed), q, n)
    back = loads_channel(dumps_channel(ch))
    assert np.array_equal(back.px, ch.px) and np.array_equal(back.pyx, ch.pyx)


@settings(max_examples=60, deadline=None)
@given(q=st.integers(2, 5), n=st.integers(2, 12), seed=st.integers(0, 2**32 - 1))
def test_prefix_ends_at_prior(q, n, seed):
    ch = random_channel(np.random.default_rng(seed), q, n)
    s = joint_prefix(ch).s
    assert np.all(np.abs(s[:, -1] - ch.px) <= 1e-12)
    assert math.isclose(ch.py.sum(), 1.0, abs_tol=1e-12)
