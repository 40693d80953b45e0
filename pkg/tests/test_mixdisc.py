from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capaf.errors import InvalidInputError
from capaf.mixdisc import (SymMatrixTuple, alexandrov_md_check,
                           md_transform_check, mixed_disc_gradient,
                           mixed_discriminant, mixed_discriminant_batch)


def spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + 0.3 * np.eye(n)


def test_diagonal_is_determinant():
    a = np.diag([2.0, 3.0])
    assert mixed_discriminant([a, a]) == pytest.approx(6.0, abs=1e-14)


def test_two_by_two_example():
    a, b = np.diag([2.0, 3.0]), np.diag([5.0, 7.0])
    assert mixed_discriminant([a, b]) == pytest.approx(14.5, abs=1e-14)


def test_routes_agree_n3():
    rng = np.random.default_rng(0)
    for _ in range(50):
        mats = [spd(rng, 3) for _ in range(3)]
        q_delta = mixed_discriminant(mats, route="delta")
        q_subset = mixed_discriminant(mats, route="subset")
        assert q_delta == pytest.approx(q_subset, rel=1e-12)


def test_symmetry_under_permutation():
    rng = np.random.default_rng(1)
    for n in (2, 3):
        mats = [spd(rng, n) for _ in range(n)]
        base = mixed_discriminant(mats)
        from itertools import permutations

        for perm in permutations(range(n)):
            assert mixed_discriminant([mats[p] for p in perm]) == pytest.approx(
                base, rel=1e-12)


def test_multilinearity():
    rng = np.random.default_rng(2)
    for n in (2, 3):
        mats = [spd(rng, n) for _ in range(n)]
        extra = spd(rng, n)
        lhs = mixed_discriminant([2.0 * mats[0] + 3.0 * extra] + mats[1:])
        rhs = 2.0 * mixed_discriminant(mats) + 3.0 * mixed_discriminant([extra] + mats[1:])
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_gradient_identity_all_identity():
    g = mixed_disc_gradient([np.eye(2), np.eye(2)])
    assert np.allclose(g, 0.5 * np.eye(2), atol=1e-15)


def test_gradient_contraction():
    rng = np.random.default_rng(3)
    for n in (2, 3):
        mats = [spd(rng, n) for _ in range(n)]
        g = mixed_disc_gradient(mats)
        assert float(np.sum(mats[0] * g)) == pytest.approx(
            mixed_discriminant(mats), rel=1e-12)


def test_gradient_positive_definite():
    rng = np.random.default_rng(4)
    for n in (2, 3):
        mats = [spd(rng, n) for _ in range(n)]
        assert mixed_discriminant(mats) > 0
        assert np.min(np.linalg.eigvalsh(mixed_disc_gradient(mats))) > 0


def test_gradient_fd_oracle():
    rng = np.random.default_rng(5)
    mats = [spd(rng, 3) for _ in range(3)]
    g = mixed_disc_gradient(mats)
    h = 1e-6
    for i in range(3):
        for j in range(3):
            e = np.zeros((3, 3))
            e[i, j] = h
            num = (mixed_discriminant([mats[0] + e] + mats[1:])
                   - mixed_discriminant([mats[0] - e] + mats[1:])) / (2 * h)
            assert num == pytest.approx(g[i, j], rel=1e-7, abs=1e-9)


def test_transform_law():
    rng = np.random.default_rng(6)
    mats = [spd(rng, 2), spd(rng, 2)]
    assert md_transform_check(mats, np.eye(2))["relative_error"] < 1e-15
    chk = md_transform_check(mats, 2.0 * np.eye(2))
    assert chk["passed"] and chk["rhs"] == pytest.approx(
        4.0 * mixed_discriminant(mats), rel=1e-13)
    for n in (2, 3):
        mats = [spd(rng, n) for _ in range(n)]
        b = rng.normal(size=(n, n)) + 2 * np.eye(n)
        assert md_transform_check(mats, b)["relative_error"] < 1e-10


def test_transform_rejects_singular():
    with pytest.raises(InvalidInputError):
        md_transform_check([np.eye(2), np.eye(2)], np.zeros((2, 2)))


def test_alexandrov_equality_cases():
    rng = np.random.default_rng(7)
    b = spd(rng, 3)
    rest = [spd(rng, 3)]
    rep = alexandrov_md_check(b, b, rest)
    assert rep.passed and rep.equality_expected and abs(rep.gap) < 1e-12
    rep3 = alexandrov_md_check(3.0 * b, b, rest)
    assert rep3.passed and rep3.equality_expected
    assert abs(rep3.relative_gap) < 1e-12


def test_alexandrov_randomized():
    rng = np.random.default_rng(8)
    for n in (2, 3):
        for _ in range(100):
            rest = [spd(rng, n) for _ in range(n - 2)]
            a = rng.normal(size=(n, n))
            a = 0.5 * (a + a.T)  # A need not be definite
            rep = alexandrov_md_check(a, spd(rng, n), rest)
            assert rep.relative_gap >= -1e-12


def test_tuple_validation():
    with pytest.raises(InvalidInputError):
        SymMatrixTuple((np.array([[0.0, 1.0], [0.0, 0.0]]),) * 2)
    with pytest.raises(InvalidInputError):
        SymMatrixTuple((np.eye(2),))
    with pytest.raises(InvalidInputError):
        mixed_discriminant([np.eye(2)])


def test_batched_matches_scalar():
    rng = np.random.default_rng(9)
    a = np.stack([spd(rng, 2) for _ in range(6)])
    b = np.stack([spd(rng, 2) for _ in range(6)])
    batch = mixed_discriminant_batch([a, b])
    for i in range(6):
        assert batch[i] == pytest.approx(mixed_discriminant([a[i], b[i]]), rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(data=st.data(), n=st.sampled_from([2, 3]))
def test_property_diagonal_and_symmetry(data, n):
    entries = data.draw(st.lists(
        st.floats(min_value=-2.0, max_value=2.0, allow_nan=False),
        min_size=n * n * n, max_size=n * n * n))
    raw = np.asarray(entries).reshape(n, n, n)
    mats = [m @ m.T + 0.5 * np.eye(n) for m in raw]
    q = mixed_discriminant(mats)
    assert mixed_discriminant(mats[::-1]) == pytest.approx(q, rel=1e-11, abs=1e-13)
    d = mixed_discriminant([mats[0]] * n)
    assert d == pytest.approx(float(np.linalg.det(mats[0])), rel=1e-11, abs=1e-13)
