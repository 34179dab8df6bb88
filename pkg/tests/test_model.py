import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_source
from oracles import brute_point
from rdpriv.model import (EncodedSet, SourceModel, eval_point, induced_joint, lift_channel,
                          validate)
from rdpriv.probcore import Channel, UsageError, conditional_entropy

K = EncodedSet((0, 1, 2))
R = EncodedSet((0,))


def random_channel(rng, rows, cols):
    return Channel(rng.dirichlet(np.ones(cols), size=rows))


class TestValidate:
    def test_well_formed(self):
        assert validate(random_source(0)) == []

    def test_overlap(self):
        src = SourceModel.build((2, 2, 2), (0, 1), (1, 2), np.full(8, 1 / 8))
        assert any(m.startswith("partition") for m in validate(src))

    def test_negative_distortion(self):
        src = SourceModel.build((2, 2), (0,), (1,), np.full(4, 0.25),
                                distortion=[[0, -1], [1, 0]])
        assert any(m.startswith("distortion") for m in validate(src))

    def test_encoded_must_contain_revealed(self):
        assert any("revealed" in m for m in validate(random_source(0), EncodedSet((1, 2))))

    def test_distortion_rows(self):
        src = SourceModel.build((2, 2), (0,), (1,), np.full(4, 0.25),
                                distortion=np.zeros((3, 2)))
        assert validate(src)


class TestInducedJoint:
    def test_identity_on_revealed(self):
        src = random_source(1)
        j = induced_joint(src, R, Channel.identity(2)).probs
        for a in range(2):
            for b in range(2):
                if a != b:
                    assert j[a, :, :, b].sum() == 0.0

    def test_constant_channel_independent(self):
        src = random_source(2)
        j = induced_joint(src, K, Channel.constant(8, [0.3, 0.7])).probs
        np.testing.assert_allclose(j, np.multiply.outer(src.joint.probs, [0.3, 0.7]), atol=1e-15)

    def test_cells_match_triple_product(self):
        rng = np.random.default_rng(5)
        src = random_source(5)
        w = random_channel(rng, 4, 2)
        e = EncodedSet((0, 2))
        j = induced_joint(src, e, w).probs
        for x in itertools.product(range(2), repeat=3):
            for b in range(2):
                ref = src.joint.probs[x] * w.probs[2 * x[0] + x[2], b]
                assert j[x + (b,)] == pytest.approx(ref, abs=1e-16)

    def test_shape_mismatch(self):
        with pytest.raises(UsageError):
            induced_joint(random_source(0), K, Channel.identity(2))


class TestEvalPoint:
    def test_identity_forces_zero_distortion(self):
        src = random_source(7)
        p = eval_point(src, R, Channel.identity(2))
        joint = src.joint.probs
        p_r = joint.sum(axis=(1, 2))
        assert p.distortion == pytest.approx(0.0, abs=1e-15)
        assert p.rate == pytest.approx(-(p_r * np.log2(p_r)).sum())
        ref = conditional_entropy(src.joint, [1, 2], [0])
        assert p.equivocation == pytest.approx(ref, abs=1e-12)

    def test_constant_channel(self):
        src = random_source(8)
        p = eval_point(src, K, Channel.constant(8, [1.0, 0.0]))
        assert p.rate == pytest.approx(0.0, abs=1e-12)
        assert p.leakage == pytest.approx(0.0, abs=1e-12)
        assert p.equivocation == pytest.approx(src.h_hidden, abs=1e-12)

    @given(st.integers(0, 10_000), st.sampled_from([(0,), (0, 1), (0, 2), (0, 1, 2)]))
    def test_matches_brute_force(self, seed, enc):
        rng = np.random.default_rng(seed)
        src = random_source(seed)
        e = EncodedSet(enc)
        w = rng.dirichlet(np.ones(2), size=2 ** len(enc))
        p = eval_point(src, e, Channel(w))
        ref = brute_point(src.sizes, src.revealed, src.hidden, e.encoded, src.joint.flat, w,
                          src.distortion)
        np.testing.assert_allclose([p.rate, p.distortion, p.equivocation, p.leakage], ref,
                                   atol=1e-9)
        assert p.equivocation + p.leakage == pytest.approx(src.h_hidden, abs=1e-9)
        assert 0 <= p.distortion <= src.d_max


class TestLift:
    def test_identity_lift_on_r(self):
        src = random_source(0)
        w = Channel([[0.2, 0.8], [0.6, 0.4]])
        np.testing.assert_array_equal(lift_channel(w, src, R).probs, w.probs)

    def test_identity_to_k_is_deterministic(self):
        src = random_source(0)
        lifted = lift_channel(Channel.identity(2), src, K).probs
        np.testing.assert_array_equal(lifted.argmax(axis=1), [0, 0, 0, 0, 1, 1, 1, 1])
        assert set(lifted.ravel()) == {0.0, 1.0}

    @given(st.integers(0, 10_000))
    def test_lift_preserves_point(self, seed):
        rng = np.random.default_rng(seed)
        src = random_source(seed)
        w = random_channel(rng, 2, 2)
        a = eval_point(src, R, w)
        b = eval_point(src, K, lift_channel(w, src, K))
        np.testing.assert_allclose([a.rate, a.distortion, a.equivocation],
                                   [b.rate, b.distortion, b.equivocation], atol=1e-9)

    def test_row_mismatch(self):
        with pytest.raises(UsageError):
            lift_channel(Channel.identity(4), random_source(0), K)


@given(st.integers(0, 10_000), st.sampled_from([(0,), (0, 1)]))
def test_markov_property(seed, enc):
    """The reproduction depends on X_K only through X_E."""
    rng = np.random.default_rng(seed)
    src = random_source(seed)
    e = EncodedSet(enc)
    w = rng.dirichlet(np.ones(2), size=2 ** len(enc))
    j = induced_joint(src, e, Channel(w)).probs
    for x in itertools.product(range(2), repeat=3):
        px = j[x].sum()
        if px > 0:
            xe = 0
            for a in enc:
                xe = 2 * xe + x[a]
            np.testing.assert_allclose(j[x] / px, w[xe], atol=1e-9)


def test_flattening_order():
    """E = (0, 2) enumerates (x0, x2) with x2 varying fastest."""
    src = random_source(4)
    idx = src.project_index((0, 2))
    expect = [2 * x0 + x2 for x0, x1, x2 in itertools.product(range(2), repeat=3)]
    np.testing.assert_array_equal(idx, expect)
