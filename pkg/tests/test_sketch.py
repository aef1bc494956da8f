import math

import numpy as np
import pytest

from rbas.sketch import (
    ACHLIOPTAS_C,
    ACHLIOPTAS_W,
    JlParams,
    SketchEnsemble,
    _jl_threshold,
    draw_ensemble,
    jl_failure_bound,
    jl_min_embedding_dim,
    sample_sketch,
)
from rbas.linalg import make_rng


def test_achlioptas_dimension():
    assert jl_min_embedding_dim(ACHLIOPTAS_C, ACHLIOPTAS_W, 4) == 15


def test_dimension_is_strict_minimum():
    for C, w, rho in [(ACHLIOPTAS_C, ACHLIOPTAS_W, 4), (10, 0.1, 1), (0.5, 3.0, 2.5), (1.0, 1.0, 1.0)]:
        p = jl_min_embedding_dim(C, w, rho)
        rhs = (rho + 1) * math.log(2) / (0.999 * C) * max(1 / 0.999, w)
        assert p > rhs and not (p - 1 > rhs)


def test_small_constants_case():
    assert jl_min_embedding_dim(10, 0.1, 1) == math.floor(2 * math.log(2) / (0.999 * 10) / 0.999) + 1 == 1


def test_dimension_monotone_in_rho():
    ps = [jl_min_embedding_dim(ACHLIOPTAS_C, ACHLIOPTAS_W, r) for r in range(1, 20)]
    assert ps == sorted(ps)
    assert jl_min_embedding_dim(ACHLIOPTAS_C, ACHLIOPTAS_W, 9) >= 2 * jl_min_embedding_dim(ACHLIOPTAS_C, ACHLIOPTAS_W, 4) - 1


def test_dimension_rejects_nonpositive():
    with pytest.raises(ValueError):
        jl_min_embedding_dim(0, 1, 1)


def test_failure_bound():
    assert jl_failure_bound(4, 20) == 2.0**-80
    assert jl_failure_bound(4, 20) == pytest.approx(8.27e-25, rel=1e-3)
    assert jl_failure_bound(3, 0) == 1.0
    assert jl_failure_bound(2, 10) == pytest.approx(jl_failure_bound(2, 5) ** 2, rel=1e-15)


def test_params():
    p = JlParams.achlioptas()
    assert (p.p, p.epsilon) == (15, 20)
    assert p.p > _jl_threshold(p.C, p.w, p.rho)
    with pytest.raises(ValueError):
        JlParams(C=1, w=1, rho=1, p=0, epsilon=1)


def test_gaussian_reproducible():
    params = JlParams.achlioptas(epsilon=3)
    a = draw_ensemble(10, params, "gaussian", 5)
    b = draw_ensemble(10, params, "gaussian", 5)
    assert all(np.array_equal(x, y) for x, y in zip(a.matrices, b.matrices))
    assert len(a) == 3 and a.n == 10 and a.p == 15


def test_achlioptas_support_and_frequencies():
    S = sample_sketch(400, 15, "achlioptas", make_rng(1))
    v = math.sqrt(3 / 15)
    assert set(np.round(np.unique(S), 12)) <= {round(-v, 12), 0.0, round(v, 12)}
    frac_zero = np.mean(S == 0)
    assert abs(frac_zero - 2 / 3) < 0.01


@pytest.mark.parametrize("dist", ["gaussian", "achlioptas"])
def test_isometry_in_expectation(dist):
    rng = make_rng(2)
    r = rng.standard_normal(30)
    r /= np.linalg.norm(r)
    vals = [np.sum((sample_sketch(30, 15, dist, rng).T @ r) ** 2) for _ in range(1000)]
    assert 0.9 <= np.mean(vals) <= 1.1


def test_gaussian_sketches_never_annihilate():
    rng = make_rng(3)
    r = rng.standard_normal(40)
    r /= np.linalg.norm(r)
    vals = np.array([np.sum((sample_sketch(40, 15, "gaussian", rng).T @ r) ** 2) for _ in range(10000)])
    assert np.all(vals > 1e-12)


def test_unknown_distribution():
    with pytest.raises(ValueError):
        sample_sketch(3, 2, "cauchy", make_rng(0))


def test_save_load(tmp_path):
    ens = draw_ensemble(6, JlParams.achlioptas(epsilon=2), "achlioptas", 9)
    ens.save(tmp_path / "e.npz")
    back = SketchEnsemble.load(tmp_path / "e.npz")
    assert back.distribution == "achlioptas" and back.seed == 9
    assert all(np.array_equal(x, y) for x, y in zip(ens.matrices, back.matrices))
