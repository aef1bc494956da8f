import numpy as np
import pytest

from conftest import random_system
from rbas.system import (
    InconsistentSystemError,
    LinearSystem,
    Partition,
    load_system,
    make_partition,
    make_targets,
    residual_star,
    save_system,
    solution_projection,
)

EQ44 = np.array([[2.0, 1.0, 0.0], [-1.0, 2.0, 3.0], [1.0, -3.0, 6.0], [0.0, 1.0, -5.0]])


def test_load_csv_identity(tmp_path):
    np.savetxt(tmp_path / "A.csv", np.eye(2), delimiter=",")
    np.savetxt(tmp_path / "b.csv", np.ones((2, 1)), delimiter=",")
    s = load_system(tmp_path / "A.csv", tmp_path / "b.csv")
    assert s.consistent and s.rank == 2


def test_contradictory_rows():
    s = LinearSystem([[1.0, 0.0], [1.0, 0.0]], [0.0, 1.0])
    assert not s.consistent


def test_load_matrix_market_rank(tmp_path):
    s = LinearSystem(EQ44, EQ44 @ np.ones(3))
    save_system(s, tmp_path / "A.mtx")
    t = load_system(tmp_path / "A.mtx")
    assert t.rank == np.linalg.matrix_rank(EQ44) == 3
    assert np.array_equal(t.A, s.A) and np.array_equal(t.b, s.b)


def test_csv_roundtrip(tmp_path, rng):
    s = random_system(rng, 5, 3)
    save_system(s, tmp_path / "s.csv")
    t = load_system(tmp_path / "s.csv")
    assert np.array_equal(t.A, s.A) and np.array_equal(t.b, s.b)


def test_dimension_mismatch(tmp_path):
    np.savetxt(tmp_path / "A.csv", np.eye(3), delimiter=",")
    np.savetxt(tmp_path / "b.csv", np.ones((2, 1)), delimiter=",")
    with pytest.raises(ValueError, match="dimension mismatch"):
        load_system(tmp_path / "A.csv", tmp_path / "b.csv")


def test_parse_failure(tmp_path):
    (tmp_path / "A.csv").write_text("1,2\nx,y\n")
    with pytest.raises(ValueError, match="could not parse"):
        load_system(tmp_path / "A.csv")


def test_solution_projection_examples():
    s = LinearSystem([[1.0, 0.0]], [2.0])
    assert np.allclose(solution_projection(s, [0.0, 5.0]), [2.0, 5.0])
    assert np.allclose(solution_projection(s, [2.0, -1.0]), [2.0, -1.0], atol=1e-10)


def test_solution_projection_orthogonality(rng):
    for _ in range(10):
        s = random_system(rng, 6, 4, rank=3)
        x = rng.standard_normal(4)
        p = solution_projection(s, x)
        assert np.allclose(s.A @ p, s.b, atol=1e-9)
        null = np.linalg.svd(s.A)[2][3:].T
        z = p + null @ rng.standard_normal(null.shape[1])
        assert abs((x - p) @ (z - p)) <= 1e-9


def test_solution_projection_inconsistent():
    s = LinearSystem([[1.0], [1.0]], [0.0, 1.0])
    with pytest.raises(InconsistentSystemError, match="solution set empty"):
        solution_projection(s, [0.0])


def test_solution_projection_idempotent_and_minimal(rng):
    s = random_system(rng, 4, 6)
    x = rng.standard_normal(6)
    p = solution_projection(s, x)
    assert np.allclose(solution_projection(s, p), p, atol=1e-10)
    null = np.linalg.svd(s.A)[2][4:].T
    for _ in range(100):
        z = p + null @ rng.standard_normal(2)
        assert np.linalg.norm(x - p) <= np.linalg.norm(x - z) + 1e-9


def test_residual_star_examples(rng):
    assert np.allclose(residual_star(random_system(rng, 5, 3)), 0, atol=1e-10)
    assert np.allclose(residual_star(LinearSystem([[1.0], [0.0]], [0.0, 3.0])), [0.0, -3.0])


def test_residual_star_normal_equations(rng):
    for _ in range(10):
        s = random_system(rng, 8, 3, consistent=False)
        r = residual_star(s)
        assert np.linalg.norm(s.A.T @ r) <= 1e-9 * np.linalg.norm(s.A, 2) * np.linalg.norm(s.b)
        x = np.linalg.lstsq(s.A, s.b, rcond=None)[0]
        assert np.allclose(r, s.A @ x - s.b, atol=1e-10)


def test_residual_star_permutation_invariance(rng):
    s = random_system(rng, 8, 3, consistent=False)
    perm = rng.permutation(8)
    t = LinearSystem(s.A[perm], s.b[perm])
    back = np.empty(8)
    back[perm] = residual_star(t)
    assert np.allclose(back, residual_star(s), atol=1e-9)


def test_targets(rng):
    s = random_system(rng, 5, 7)
    x0 = rng.standard_normal(7)
    t = make_targets(s, x0, "row")
    assert np.allclose(s.A @ t.projected_x0, s.b, atol=1e-9)
    Q = s.row_basis
    d = x0 - t.projected_x0
    assert np.allclose(Q @ (Q.T @ d), d, atol=1e-9)
    s2 = random_system(rng, 9, 3, consistent=False)
    t2 = make_targets(s2, np.zeros(3), "col")
    assert np.allclose(s2.A.T @ t2.r_star, 0, atol=1e-9)
    Qc = s2.col_basis
    v = s2.b + t2.r_star
    assert np.allclose(Qc @ (Qc.T @ v), v, atol=1e-9)


def test_make_partition_examples():
    s = LinearSystem(np.eye(4), np.ones(4))
    assert make_partition(s, "row", equal_blocks=2).as_lists() == [[0, 1], [2, 3]]
    assert make_partition(s, "row", explicit=[[0, 2], [1, 3]]).as_lists() == [[0, 2], [1, 3]]
    with pytest.raises(ValueError, match="overlap"):
        make_partition(s, "row", explicit=[[0], [0, 1], [2, 3]])
    with pytest.raises(ValueError, match="cover"):
        make_partition(s, "row", explicit=[[0], [1, 2]])
    with pytest.raises(ValueError):
        make_partition(s, "row", equal_blocks=5)
    assert len(make_partition(s, "col", equal_blocks=3)) == 3


def test_partition_rejects_empty_block():
    with pytest.raises(ValueError, match="empty"):
        Partition(blocks=([0, 1], []), side="row")
