import numpy as np
import pytest

from specdiv.hosvd import (
    Method,
    TuckerFormatError,
    error_upper_bound,
    exact_error,
    read_tucker,
    reconstruct,
    st_hosvd,
    storage_cost,
    t_hosvd,
    write_tucker,
)
from specdiv.tensor import frobenius_norm, mode_dot, multi_mode_dot


def rank1(a, b, c):
    return np.einsum("i,j,k->ijk", a, b, c)


def random_orthonormal(rng, n, k):
    q, _ = np.linalg.qr(rng.normal(size=(n, k)))
    return q


def superdiagonal_model(rng, dims, values):
    """Tensor with orthonormal factors and a superdiagonal core.

    Truncating such a tensor at rank (r, r, r) must lose exactly the dropped
    core coefficients, which gives an analytic reconstruction error.
    """
    k = len(values)
    core = np.zeros((k, k, k))
    for i, v in enumerate(values):
        core[i, i, i] = v
    factors = [random_orthonormal(rng, n, k) for n in dims]
    return multi_mode_dot(core, factors)


class TestTHosvd:
    def test_full_rank_reconstruction(self):
        rng = np.random.default_rng(40)
        t = rng.normal(size=(6, 5, 3))
        f = t_hosvd(t, t.shape)
        assert exact_error(t, f) <= 1e-10 * frobenius_norm(t)

    def test_rank1_exact(self):
        rng = np.random.default_rng(41)
        t = rank1(rng.normal(size=5), rng.normal(size=4), rng.normal(size=3))
        f = t_hosvd(t, (1, 1, 1))
        assert exact_error(t, f) <= 1e-10 * frobenius_norm(t)

    def test_pythagoras(self):
        rng = np.random.default_rng(42)
        t = rng.normal(size=(12, 10, 3))
        f = t_hosvd(t, (4, 4, 2))
        lhs = exact_error(t, f) ** 2
        rhs = frobenius_norm(t) ** 2 - frobenius_norm(f.core) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_factor_orthonormality(self):
        rng = np.random.default_rng(43)
        f = t_hosvd(rng.normal(size=(9, 8, 3)), (4, 3, 2))
        for factor in f.factors:
            gram = factor.T @ factor
            assert np.max(np.abs(gram - np.eye(gram.shape[0]))) <= 1e-10

    def test_invalid_rank(self):
        t = np.zeros((4, 5, 3))
        with pytest.raises(ValueError, match="outside"):
            t_hosvd(t, (5, 2, 2))
        with pytest.raises(ValueError, match="outside"):
            t_hosvd(t, (0, 2, 2))


class TestStHosvd:
    def test_full_rank_reconstruction(self):
        rng = np.random.default_rng(44)
        t = rng.normal(size=(6, 5, 3))
        f = st_hosvd(t, t.shape)
        assert exact_error(t, f) <= 1e-10 * frobenius_norm(t)

    def test_rank1_matches_t_hosvd(self):
        rng = np.random.default_rng(45)
        t = rank1(rng.normal(size=5), rng.normal(size=4), rng.normal(size=3))
        seq = st_hosvd(t, (1, 1, 1))
        trunc = t_hosvd(t, (1, 1, 1))
        assert exact_error(t, seq) <= 1e-10 * frobenius_norm(t)
        for fs, ft in zip(seq.factors, trunc.factors):
            np.testing.assert_allclose(np.abs(fs), np.abs(ft), atol=1e-10)

    def test_step_energy_telescoping(self):
        rng = np.random.default_rng(46)
        t = rng.normal(size=(12, 10, 3))
        f = st_hosvd(t, (4, 4, 2), order=(0, 1, 2))
        total = exact_error(t, f) ** 2
        assert total == pytest.approx(sum(f.step_energies), rel=1e-9)

    def test_step_energies_match_explicit_projections(self):
        # Cheap norm-difference energies vs the explicit form that
        # materializes each partially projected tensor.
        rng = np.random.default_rng(47)
        t = rng.normal(size=(8, 7, 4))
        order = (2, 0, 1)
        f = st_hosvd(t, (3, 4, 2), order=order)
        current = t
        explicit = []
        for mode in order:
            u = f.factors[mode]
            projected = mode_dot(current, u @ u.T, mode)
            explicit.append(frobenius_norm(current - projected) ** 2)
            current = projected
        np.testing.assert_allclose(f.step_energies, explicit, rtol=1e-9, atol=1e-12)

    def test_pythagoras(self):
        rng = np.random.default_rng(48)
        t = rng.normal(size=(12, 10, 3))
        f = st_hosvd(t, (4, 4, 2))
        lhs = exact_error(t, f) ** 2
        rhs = frobenius_norm(t) ** 2 - frobenius_norm(f.core) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_invalid_order(self):
        t = np.zeros((4, 5, 3))
        with pytest.raises(ValueError, match="permutation"):
            st_hosvd(t, (2, 2, 2), order=(0, 0, 1))

    def test_aggressive_early_truncation_still_works(self):
        # After truncating the first two modes to rank 1, the remaining
        # unfolding is a column vector; the last factor must still come out
        # orthonormal at rank 2.
        rng = np.random.default_rng(49)
        t = rng.normal(size=(6, 5, 3))
        f = st_hosvd(t, (1, 1, 2))
        gram = f.factors[2].T @ f.factors[2]
        assert np.max(np.abs(gram - np.eye(2))) <= 1e-10


class TestReconstructAndErrors:
    def test_reconstruct_zero_core(self):
        rng = np.random.default_rng(50)
        f = t_hosvd(rng.normal(size=(5, 4, 3)), (2, 2, 2))
        f.core[:] = 0.0
        assert not reconstruct(f).any()

    def test_reconstruct_norm_equals_core_norm(self):
        rng = np.random.default_rng(51)
        f = t_hosvd(rng.normal(size=(7, 6, 3)), (3, 3, 2))
        assert frobenius_norm(reconstruct(f)) == pytest.approx(
            frobenius_norm(f.core), rel=1e-10
        )

    def test_exact_error_full_rank_normalized(self):
        rng = np.random.default_rng(52)
        t = rng.normal(size=(6, 5, 3))
        t /= frobenius_norm(t)
        for f in (t_hosvd(t, t.shape), st_hosvd(t, t.shape)):
            assert exact_error(t, f) <= 1e-9

    def test_analytic_error_from_orthogonal_model(self):
        rng = np.random.default_rng(53)
        values = (10.0, 5.0, 2.0, 1.0)
        t = superdiagonal_model(rng, (7, 6, 5), values)
        expected = np.sqrt(2.0**2 + 1.0**2)
        for f in (t_hosvd(t, (2, 2, 2)), st_hosvd(t, (2, 2, 2))):
            assert exact_error(t, f) == pytest.approx(expected, rel=1e-9)

    def test_exact_error_dim_mismatch(self):
        rng = np.random.default_rng(54)
        f = t_hosvd(rng.normal(size=(5, 4, 3)), (2, 2, 2))
        with pytest.raises(ValueError, match="dims"):
            exact_error(rng.normal(size=(4, 5, 3)), f)

    def test_upper_bound_full_rank_zero(self):
        rng = np.random.default_rng(55)
        t = rng.normal(size=(5, 4, 3))
        assert error_upper_bound(t, t.shape) == 0.0

    def test_upper_bound_analytic_diagonal(self):
        # Mode-0 unfolding is diag(3, 2, 1); truncating that mode to rank 1
        # contributes 2^2 + 1^2 = 5, the other modes keep full rank.
        t = np.diag([3.0, 2.0, 1.0]).reshape(3, 3, 1)
        assert error_upper_bound(t, (1, 3, 1)) ** 2 == pytest.approx(5.0, rel=1e-12)

    def test_upper_bound_dominates_exact_error(self):
        rng = np.random.default_rng(56)
        for _ in range(500):
            t = rng.normal(size=(8, 7, 3))
            bound = error_upper_bound(t, (3, 3, 2))
            for f in (t_hosvd(t, (3, 3, 2)), st_hosvd(t, (3, 3, 2))):
                assert exact_error(t, f) <= bound

    def test_eckart_young_specialization(self):
        # With n3 = 1 and only mode 0 truncated, the tensor error must equal
        # the optimal matrix error from a full SVD oracle.
        rng = np.random.default_rng(57)
        m = rng.normal(size=(9, 7))
        t = m.reshape(9, 7, 1)
        s = np.linalg.svd(m, compute_uv=False)
        for k in (2, 5):
            f = t_hosvd(t, (k, 7, 1))
            expected = np.sqrt(np.sum(s[k:] ** 2))
            assert exact_error(t, f) == pytest.approx(expected, rel=1e-9)

    def test_low_multilinear_rank_reconstructs_exactly(self):
        rng = np.random.default_rng(58)
        core = rng.normal(size=(3, 2, 2))
        t = multi_mode_dot(core, [rng.normal(size=(8, 3)), rng.normal(size=(7, 2)),
                                  rng.normal(size=(3, 2))])
        for f in (t_hosvd(t, (3, 2, 2)), st_hosvd(t, (3, 2, 2))):
            assert exact_error(t, f) <= 1e-9 * frobenius_norm(t)


class TestStorageCost:
    def test_units_formula(self):
        cost = storage_cost((120, 150, 3), (10, 10, 2), 120 * 150 * 2, 120 * 150 * 3)
        assert cost.units == 120 * 10 + 150 * 10 + 3 * 2 + 10 * 10 * 2 == 2906

    def test_europe_small_rank(self):
        cost = storage_cost((4800, 6000, 3), (10, 10, 2), 4800 * 6000 * 2, 4800 * 6000 * 3)
        assert round(cost.relative_ratio, 4) == 0.0019

    def test_earth_large_rank(self):
        cost = storage_cost((3600, 7200, 3), (1000, 1000, 2), 3600 * 7200 * 2, 3600 * 7200 * 3)
        assert round(cost.relative_ratio, 4) == 0.2469
        assert round(cost.absolute_ratio, 4) == 0.1646

    def test_checkable_post(self):
        cost = storage_cost((4800, 6000, 3), (1000, 1000, 2), 4800 * 6000 * 2, 4800 * 6000 * 3)
        assert round(cost.relative_ratio, 4) == 0.2222
        assert round(cost.absolute_ratio, 4) == 0.1481

    def test_degenerate_flag(self):
        dims = (4, 5, 3)
        total = 4 * 5 * 3
        cost = storage_cost(dims, dims, total, total)
        assert cost.units > total
        assert cost.degenerate

    def test_zero_denominator(self):
        with pytest.raises(ValueError, match="positive"):
            storage_cost((4, 5, 3), (2, 2, 2), 0, 60)


class TestTuckerIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(59)
        t = rng.normal(size=(6, 5, 3))
        f = st_hosvd(t, (3, 2, 2), order=(1, 0, 2))
        path = tmp_path / "demo.tuck"
        write_tucker(f, path)
        back = read_tucker(path)
        assert back.method is Method.ST_HOSVD
        assert back.processing_order == (1, 0, 2)
        assert back.core.tobytes() == f.core.tobytes()
        for a, b in zip(back.factors, f.factors):
            assert a.tobytes() == b.tobytes()

    def test_idempotent_bytes(self, tmp_path):
        rng = np.random.default_rng(60)
        f = t_hosvd(rng.normal(size=(5, 4, 3)), (2, 2, 2))
        one, two = tmp_path / "a.tuck", tmp_path / "b.tuck"
        write_tucker(f, one)
        write_tucker(f, two)
        assert one.read_bytes() == two.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.tuck"
        path.write_bytes(b"NOTTUCKF" + b"\0" * 40)
        with pytest.raises(TuckerFormatError, match="byte 0"):
            read_tucker(path)

    def test_unknown_method_code(self, tmp_path):
        rng = np.random.default_rng(61)
        f = t_hosvd(rng.normal(size=(5, 4, 3)), (2, 2, 2))
        path = tmp_path / "m.tuck"
        write_tucker(f, path)
        data = bytearray(path.read_bytes())
        data[8] = 9
        path.write_bytes(bytes(data))
        with pytest.raises(TuckerFormatError, match="byte 8"):
            read_tucker(path)

    def test_truncated_payload(self, tmp_path):
        rng = np.random.default_rng(62)
        f = t_hosvd(rng.normal(size=(5, 4, 3)), (2, 2, 2))
        path = tmp_path / "t.tuck"
        write_tucker(f, path)
        path.write_bytes(path.read_bytes()[:-16])
        with pytest.raises(TuckerFormatError, match="mismatch"):
            read_tucker(path)
