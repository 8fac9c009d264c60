import itertools
import json
import math

import numpy as np
import pytest

from almkit.problems import (
    ClusteringInstance,
    EvInstance,
    LcqpInstance,
    distance_matrix,
    gen_clustering,
    gen_ev,
    gen_lcqp,
    instance_from_dict,
    instance_to_dict,
    lcqp_row_bounds,
    load_instance,
    load_points_csv,
    save_instance,
)
from almkit.prox import BoxSet


class TestGenLcqp:
    def test_seeded_determinism_is_bitwise(self):
        a = gen_lcqp(4, 16, 1.0, seed=42)
        b = gen_lcqp(4, 16, 1.0, seed=42)
        for field in ("Q", "c", "A", "b", "x0"):
            assert np.array_equal(getattr(a, field), getattr(b, field))
        c = gen_lcqp(4, 16, 1.0, seed=43)
        assert not np.array_equal(a.Q, c.Q)

    def test_spectrum_shifted_to_target(self):
        inst = gen_lcqp(3, 30, 2.5, seed=1)
        lam_min = float(np.linalg.eigvalsh(inst.Q)[0])
        assert abs(lam_min + 2.5) <= 1e-8

    def test_constructed_feasible_point(self):
        inst = gen_lcqp(5, 25, 1.0, seed=9)
        # b = A xhat exactly, and xhat sits in the inner half of the box.
        residuals = [float(np.linalg.norm(inst.A @ x - inst.b)) for x in [inst.x0]]
        assert all(np.isfinite(residuals))
        assert np.all(inst.lower == -5.0) and np.all(inst.upper == 5.0)
        # Recover the feasible point's residual through the generator's own draw.
        from almkit.problems import STREAM_FEASIBLE, _rng

        xhat = _rng(9, STREAM_FEASIBLE).uniform(inst.lower / 2.0, inst.upper / 2.0)
        assert float(np.linalg.norm(inst.A @ xhat - inst.b)) == 0.0

    def test_row_bounds_match_vertex_enumeration(self):
        inst = gen_lcqp(3, 8, 1.0, seed=3)
        box = BoxSet(inst.lower, inst.upper)
        bounds = lcqp_row_bounds(inst.A, inst.b, box)
        for i in range(3):
            best = max(
                abs(float(inst.A[i] @ np.array(v) - inst.b[i]))
                for v in itertools.product(*zip(inst.lower, inst.upper))
            )
            expected = max(best, float(np.linalg.norm(inst.A[i])))
            assert bounds[i] == pytest.approx(expected, rel=1e-12)

    def test_degenerate_shapes_rejected(self):
        with pytest.raises(ValueError):
            gen_lcqp(10, 10, 1.0, seed=0)
        with pytest.raises(ValueError):
            gen_lcqp(2, 10, 0.0, seed=0)

    def test_problem_ledger_consistency(self):
        prob = gen_lcqp(3, 12, 1.0, seed=2).to_problem()
        ledger = prob.constants
        assert ledger.L_bar == 0.0 and ledger.rho_c == 0.0
        assert ledger.L_c == pytest.approx(float(np.sum(ledger.B_i**2)))
        rho_hat, L_hat = prob.default_curvature(5.0, 0.0)
        inst = gen_lcqp(3, 12, 1.0, seed=2)
        exact = np.linalg.norm(inst.Q + 5.0 * inst.A.T @ inst.A, 2)
        assert rho_hat == 1.0
        assert L_hat == pytest.approx(exact)


class TestGenEv:
    def test_seeded_determinism(self):
        a, b = gen_ev(40, seed=7), gen_ev(40, seed=7)
        assert np.array_equal(a.Q, b.Q) and np.array_equal(a.B, b.B)
        assert np.array_equal(a.x0, b.x0)

    def test_B_positive_definite_with_unit_floor(self):
        inst = gen_ev(50, seed=0)
        assert float(np.linalg.eigvalsh(inst.B)[0]) >= 1.0 - 1e-9

    def test_Q_exactly_symmetric(self):
        inst = gen_ev(30, seed=4)
        assert np.array_equal(inst.Q, inst.Q.T)

    def test_initial_point_off_the_constraint_surface(self):
        for seed in range(20):
            inst = gen_ev(25, seed=seed)
            c0 = abs(float(inst.x0 @ (inst.B @ inst.x0)) - 1.0)
            assert c0 >= 1e-3

    def test_small_size_rejected(self):
        with pytest.raises(ValueError):
            gen_ev(1, seed=0)


class TestGenClustering:
    def test_distance_matrix_properties(self):
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((12, 3))
        D = distance_matrix(pts)
        assert np.array_equal(D, D.T)
        assert np.all(np.diag(D) == 0.0)
        assert np.all(D >= 0.0)

    def test_uniform_point_satisfies_all_constraints(self):
        rng = np.random.default_rng(1)
        inst = gen_clustering(rng.standard_normal((9, 2)), r=3, s=10.0)
        prob = inst.to_problem()
        n = 9
        X = np.zeros((n, 3))
        X[:, 0] = 1.0 / math.sqrt(n)
        c = prob.constraints.evaluate(X.ravel())
        assert np.linalg.norm(c) <= 1e-12

    def test_objective_matches_brute_force(self):
        rng = np.random.default_rng(2)
        pts = rng.standard_normal((8, 2))
        inst = gen_clustering(pts, r=2, s=5.0)
        prob = inst.to_problem()
        for _ in range(5):
            X = np.abs(rng.standard_normal((8, 2)))
            brute = sum(
                inst.D[i, j] * float(X[i] @ X[j]) for i in range(8) for j in range(8)
            )
            val = prob.smooth.value(X.ravel())
            assert val == pytest.approx(brute, rel=1e-12)

    def test_gradient_matches_finite_differences(self):
        from helpers import finite_difference_gradient

        rng = np.random.default_rng(3)
        inst = gen_clustering(rng.standard_normal((6, 2)), r=2, s=5.0)
        prob = inst.to_problem()
        x = np.abs(rng.standard_normal(12)) * 0.3
        grad = prob.smooth.gradient(x)
        fd = finite_difference_gradient(prob.smooth.value, x)
        assert np.linalg.norm(grad - fd) <= 1e-5 * max(1.0, np.linalg.norm(grad))

    def test_constraint_jacobian_transpose_is_linear_and_correct(self):
        from helpers import finite_difference_gradient

        rng = np.random.default_rng(4)
        inst = gen_clustering(rng.standard_normal((5, 2)), r=2, s=5.0)
        prob = inst.to_problem()
        x = np.abs(rng.standard_normal(10)) * 0.4
        v = rng.standard_normal(5)
        jt = prob.constraints.jacobian_transpose_apply(x, v)
        fd = finite_difference_gradient(
            lambda u: float(v @ prob.constraints.evaluate(u)), x
        )
        assert np.linalg.norm(jt - fd) <= 1e-5 * max(1.0, np.linalg.norm(jt))
        # Linearity in v.
        v2 = rng.standard_normal(5)
        lhs = prob.constraints.jacobian_transpose_apply(x, 2.0 * v + v2)
        rhs = 2.0 * jt + prob.constraints.jacobian_transpose_apply(x, v2)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_benchmark_scale_configuration_builds(self):
        rng = np.random.default_rng(5)
        inst = gen_clustering(rng.standard_normal((150, 4)), r=6, s=100.0)
        prob = inst.to_problem()
        assert prob.dim == 900
        assert prob.constraints.n_constraints == 150

    def test_initial_point_feasible_with_nonzero_residual(self):
        rng = np.random.default_rng(6)
        inst = gen_clustering(rng.standard_normal((10, 3)), r=2, s=4.0)
        prob = inst.to_problem()
        assert math.isfinite(prob.nonsmooth.value(prob.x0))
        assert float(np.linalg.norm(prob.constraints.evaluate(prob.x0))) >= 1e-3


class TestCsvLoader:
    def test_plain_numeric_file(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("1.0,2.0\n3.0,4.0\n5.0,6.0\n")
        mat = load_points_csv(str(path))
        assert mat.shape == (3, 2)
        assert mat[2, 1] == 6.0

    def test_header_skipped(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("a,b\n1.0,2.0\n3.0,4.0\n")
        mat = load_points_csv(str(path))
        assert mat.shape == (2, 2)

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("1.0,2.0\n3.0,4.0,9.0\n")
        with pytest.raises(ValueError, match="line 2"):
            load_points_csv(str(path))

    def test_non_numeric_cell_names_line(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("1.0,2.0\n3.0,oops\n")
        with pytest.raises(ValueError, match="line 2"):
            load_points_csv(str(path))

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("")
        with pytest.raises(ValueError, match="no numeric data"):
            load_points_csv(str(path))


class TestInstanceSerialization:
    def test_lcqp_round_trip(self, tmp_path):
        inst = gen_lcqp(3, 10, 1.0, seed=11)
        path = tmp_path / "inst.json"
        save_instance(inst, str(path))
        loaded = load_instance(str(path))
        assert isinstance(loaded, LcqpInstance)
        for field in ("Q", "c", "A", "b", "lower", "upper", "x0"):
            assert np.array_equal(getattr(inst, field), getattr(loaded, field))
        assert loaded.rho == inst.rho and loaded.seed == inst.seed

    def test_ev_and_cluster_round_trip(self, tmp_path):
        ev = gen_ev(12, seed=2)
        data = instance_to_dict(ev)
        back = instance_from_dict(json.loads(json.dumps(data)))
        assert isinstance(back, EvInstance)
        assert np.array_equal(ev.B, back.B)

        rng = np.random.default_rng(0)
        cl = gen_clustering(rng.standard_normal((6, 2)), r=2, s=3.0)
        back = instance_from_dict(json.loads(json.dumps(instance_to_dict(cl))))
        assert isinstance(back, ClusteringInstance)
        assert np.array_equal(cl.D, back.D)

    def test_format_version_enforced(self):
        data = instance_to_dict(gen_ev(5, seed=0))
        data["format_version"] = 99
        with pytest.raises(ValueError, match="format_version"):
            instance_from_dict(data)

    def test_matrices_serialized_row_major(self):
        inst = gen_lcqp(2, 4, 1.0, seed=0)
        data = instance_to_dict(inst)
        assert data["A"][0] == inst.A[0].tolist()
