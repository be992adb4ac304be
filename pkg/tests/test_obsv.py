"""Observability stacking, numerical rank, selectors."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ivpaudit import (
    ConditioningError,
    LinearSystem,
    NoiseModel,
    Selector,
    TimeVaryingSystem,
    ValidationError,
    build_bundle,
    build_tv_observability,
    instantiate,
    numerical_rank,
    sample_configuration,
    select_columns,
)
from conftest import sweep_hidden_rank_identity


def line3_observability_poly(theta):
    """Hand-expanded observability matrix of the 3-node path structure.

    Rows are C, CA, CA^2 written out as polynomials in the weights
    (a12, a21, a23, c11, c13); an independent check on the matrix builder.
    """
    a12, a21, a23, c11, c13 = theta
    return np.array(
        [
            [c11, 0.0, c13],
            [0.0, c11 * a12, 0.0],
            [c11 * a12 * a21, 0.0, c11 * a12 * a23],
        ]
    )


def tree4_observability_poly(theta):
    """Hand-expanded observability matrix of the 4-node structure
    (weights a11, a12, a14, a22, a23, c11, c13)."""
    a11, a12, a14, a22, a23, c11, c13 = theta
    return np.array(
        [
            [c11, 0.0, c13, 0.0],
            [c11 * a11, c11 * a12, 0.0, c11 * a14],
            [c11 * a11**2, c11 * a12 * (a11 + a22), c11 * a12 * a23, c11 * a11 * a14],
            [
                c11 * a11**3,
                c11 * a12 * (a11**2 + a11 * a22 + a22**2),
                c11 * a12 * a23 * (a11 + a22),
                c11 * a11**2 * a14,
            ],
        ]
    )


class TestBundle:
    def test_line2_sum_blocks(self, sys_line2_sum):
        bundle = build_bundle(sys_line2_sum, T=1)
        assert bundle.O_T.tolist() == [[1.0, 1.0], [0.0, 0.0]]
        assert bundle.O_ob.tolist() == [[1.0, 1.0], [0.0, 0.0]]
        assert bundle.H_T.tolist() == [[0.0, 0.0], [1.0, 1.0]]

    def test_identity_system_stacks_identities(self):
        system = LinearSystem(n=3, m=3, A=np.eye(3), C=np.eye(3))
        bundle = build_bundle(system)
        assert np.array_equal(bundle.O_T, np.vstack([np.eye(3)] * 3))

    def test_default_horizon_is_minimal(self, sys_line2_first):
        assert build_bundle(sys_line2_first).T == 1

    def test_horizon_below_minimum_rejected(self, sys_line2_first):
        with pytest.raises(ValidationError, match="n-1"):
            build_bundle(sys_line2_first, T=0)

    def test_O_ob_prefix_of_longer_horizons(self, sys_line2_first):
        long = build_bundle(sys_line2_first, T=5)
        assert np.array_equal(long.O_T[:2], long.O_ob)
        assert long.O_T.shape == (6, 2)
        assert long.H_T.shape == (6, 10)

    def test_line3_polynomial_entries(self, struct_line3):
        rng = np.random.default_rng(5)
        for _ in range(10):
            theta = rng.uniform(0.1, 2.0, size=5)
            system = instantiate(struct_line3, theta)
            bundle = build_bundle(system, T=2)
            np.testing.assert_allclose(
                bundle.O_T, line3_observability_poly(theta), rtol=0, atol=1e-13
            )

    def test_tree4_polynomial_entries(self, struct_tree4):
        rng = np.random.default_rng(6)
        for _ in range(10):
            theta = rng.uniform(-2.0, 2.0, size=7)
            system = instantiate(struct_tree4, theta)
            bundle = build_bundle(system, T=3)
            np.testing.assert_allclose(
                bundle.O_T, tree4_observability_poly(theta), rtol=0, atol=1e-12
            )

    def test_toeplitz_blocks_match_matrix_power(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            n, m, T = 3, 2, 5
            A = rng.standard_normal((n, n)) * 0.7
            C = rng.standard_normal((m, n))
            system = LinearSystem(n=n, m=m, A=A, C=C)
            bundle = build_bundle(system, T=T)
            for i in range(T + 1):
                for j in range(T):
                    block = bundle.H_T[i * m:(i + 1) * m, j * n:(j + 1) * n]
                    if i > j:
                        expect = C @ np.linalg.matrix_power(A, i - j - 1)
                    else:
                        expect = np.zeros((m, n))
                    np.testing.assert_allclose(block, expect, rtol=0, atol=1e-10)

    def test_power_overflow_guard(self):
        system = LinearSystem(n=2, m=1, A=10.0 * np.eye(2), C=[[1.0, 0.0]])
        with pytest.raises(ConditioningError, match="horizon"):
            build_bundle(system, T=200)


class TestTimeVarying:
    def test_constant_sequences_reduce_to_time_invariant(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            n, m, T = 4, 2, 6
            A = rng.standard_normal((n, n)) * 0.6
            C = rng.standard_normal((m, n))
            tv = TimeVaryingSystem(n=n, m=m, A_seq=(A,) * T, C_seq=(C,) * (T + 1))
            lti = LinearSystem(n=n, m=m, A=A, C=C)
            O_hat = build_tv_observability(tv)
            O_T = build_bundle(lti, T=T).O_T
            np.testing.assert_allclose(O_hat, O_T, rtol=0, atol=1e-12)

    def test_matches_direct_product_accumulation(self):
        rng = np.random.default_rng(9)
        n, m, T = 3, 1, 4
        A_seq = tuple(rng.standard_normal((n, n)) for _ in range(T))
        C_seq = tuple(rng.standard_normal((m, n)) for _ in range(T + 1))
        tv = TimeVaryingSystem(n=n, m=m, A_seq=A_seq, C_seq=C_seq)
        O_hat = build_tv_observability(tv)
        for t in range(T + 1):
            prod = np.eye(n)
            for k in range(t):
                prod = A_seq[k] @ prod
            np.testing.assert_allclose(
                O_hat[t * m:(t + 1) * m], C_seq[t] @ prod, rtol=0, atol=1e-12
            )

    def test_horizon_beyond_sequences_rejected(self):
        tv = TimeVaryingSystem(
            n=2, m=1, A_seq=(np.eye(2),), C_seq=([[1.0, 0.0]], [[1.0, 0.0]])
        )
        with pytest.raises(ValidationError, match="cover"):
            build_tv_observability(tv, T=3)


class TestNumericalRank:
    def test_trivial_cases(self):
        assert numerical_rank(np.zeros((3, 3))) == 0
        assert numerical_rank(np.eye(4)) == 4
        outer = np.outer([1.0, 2.0, 3.0], [4.0, 5.0])
        assert numerical_rank(outer) == 1

    def test_empty_dimensions(self):
        assert numerical_rank(np.zeros((0, 3))) == 0
        assert numerical_rank(np.zeros((3, 0))) == 0

    def test_perturbation_below_tolerance_ignored(self):
        M = np.outer([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        M = M + 1e-16 * np.eye(3)
        assert numerical_rank(M) == 1

    def test_shared_tolerance_changes_decision(self):
        M = np.diag([1.0, 1e-13])
        assert numerical_rank(M) == 2
        assert numerical_rank(M, tol=1e-10) == 1

    def test_nonfinite_rejected(self):
        with pytest.raises(ValidationError, match="finite"):
            numerical_rank(np.array([[np.inf, 0.0], [0.0, 1.0]]))

    @settings(max_examples=30, deadline=None)
    @given(
        M=arrays(np.float64, (4, 3), elements=st.floats(-5, 5)),
        extra=arrays(np.float64, (2, 3), elements=st.floats(-5, 5)),
    )
    def test_rank_monotone_under_row_stacking(self, M, extra):
        stacked = np.vstack([M, extra])
        assert numerical_rank(stacked) >= numerical_rank(M)
        assert numerical_rank(stacked) <= numerical_rank(M) + extra.shape[0]

    def test_hidden_column_rank_independent_of_horizon(self):
        assert sweep_hidden_rank_identity(40, seed=90210) == 40


class TestSelectors:
    def test_selector_columns(self):
        sel = Selector.for_nodes(4, (2, 0))
        assert sel.E_P.T.tolist() == [[0, 0, 1, 0], [1, 0, 0, 0]]
        assert sel.E_Pbar.T.tolist() == [[0, 1, 0, 0], [0, 0, 0, 1]]

    def test_select_columns_both_sides(self):
        M = np.arange(12, dtype=float).reshape(3, 4)
        sel = Selector.for_nodes(4, (1,))
        assert select_columns(M, sel, "public").tolist() == M[:, [1]].tolist()
        assert select_columns(M, sel, "unpublic").tolist() == M[:, [0, 2, 3]].tolist()

    def test_empty_disclosure(self):
        sel = Selector.for_nodes(3, ())
        assert sel.E_P.shape == (3, 0)
        assert np.array_equal(sel.E_Pbar, np.eye(3))

    def test_dimension_mismatch_rejected(self):
        sel = Selector.for_nodes(3, (0,))
        with pytest.raises(ValidationError, match="columns"):
            select_columns(np.eye(4), sel)

    def test_bad_which_rejected(self):
        sel = Selector.for_nodes(3, (0,))
        with pytest.raises(ValidationError, match="which"):
            select_columns(np.eye(3), sel, "other")
