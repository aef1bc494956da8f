"""Hypothesis-driven invariants."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rbas.engine import run
from rbas.linalg import SpanTracker, gram_det, orthonormal_basis, pinv_apply
from rbas.meany import meany_constant
from rbas.samplers import CATALOGUE, REGISTRY, SamplerSpec, make_sampler
from rbas.system import LinearSystem

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def matrices(max_rows=6, max_cols=6):
    return st.tuples(st.integers(1, max_rows), st.integers(1, max_cols)).flatmap(
        lambda s: arrays(np.float64, s, elements=finite))


@given(matrices(), st.data())
def test_pinv_apply_consistent_part(M, data):
    x = data.draw(arrays(np.float64, M.shape[1], elements=finite))
    r = M @ x
    z = pinv_apply(M, r)
    assert np.linalg.norm(M @ z - r) <= 1e-8 * max(1.0, np.linalg.norm(M) * np.linalg.norm(x))
    # Minimum-norm: no component in the null space.
    assert np.linalg.norm(z) <= np.linalg.norm(x) * (1 + 1e-8) + 1e-12


@given(matrices())
def test_orthonormal_basis(M):
    Q = orthonormal_basis(M)
    assert np.allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-10)
    assert np.allclose(Q @ (Q.T @ M), M, atol=1e-8 * max(1.0, np.abs(M).max()))


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6))
def test_gram_det_unit_columns_at_most_one(seed, d, k):
    G = np.random.default_rng(seed).standard_normal((d, k))
    G /= np.linalg.norm(G, axis=0)
    g = gram_det(G)
    assert -1e-12 <= g <= 1 + 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(0, 10))
def test_span_tracker_dimension(seed, d, k):
    rng = np.random.default_rng(seed)
    t = SpanTracker(d)
    vs = rng.standard_normal((k, d))
    for v in vs:
        t.insert(v)
    assert t.dim == min(k, d)
    for v in vs:
        assert t.contains(v)
    assert np.allclose(t.basis.T @ t.basis, np.eye(t.dim), atol=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(2, 4))
@settings(max_examples=50)
def test_meany_constant_permutation_invariant(seed, d, m):
    rng = np.random.default_rng(seed)
    bases = [orthonormal_basis(rng.standard_normal((d, rng.integers(1, d + 1)))) for _ in range(m)]
    c = meany_constant(bases)
    assert 0.0 <= c <= 1.0
    perm = rng.permutation(m)
    assert abs(meany_constant([bases[i] for i in perm]) - c) <= 1e-10


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_meany_constant_orthogonal_blocks_is_one(seed, d):
    Q = np.linalg.qr(np.random.default_rng(seed).standard_normal((d, d)))[0]
    assert abs(meany_constant([Q[:, [i]] for i in range(d)]) - 1.0) <= 1e-10


@given(st.integers(0, 2**32 - 1), st.sampled_from(sorted(CATALOGUE)))
@settings(max_examples=60, deadline=None)
def test_error_never_increases(seed, name):
    rng = np.random.default_rng(seed)
    n, d = rng.integers(2, 7, size=2)
    A = rng.standard_normal((n, d))
    side = REGISTRY[name].side
    b = A @ rng.standard_normal(d)
    if side == "col":
        b = b + rng.standard_normal(n)
    s = LinearSystem(A, b)
    spec = SamplerSpec(name=name, seed=seed, **_params(name, s))
    h = run(s, make_sampler(spec, s), rng.standard_normal(d), max_iter=30)
    e = h.error_sq
    assert np.all(e[1:] <= e[:-1] + 1e-10 * max(1.0, e[0]))


def _params(name, s):
    req = REGISTRY[name].required
    side = REGISTRY[name].side
    size = s.n if side == "row" else s.d
    out = {}
    if "partition" in req:
        out["partition"] = min(2, size)
    if "sample_size" in req:
        out["sample_size"] = min(2, size)
    if "block_size" in req:
        out["block_size"] = min(2, size)
    return out
