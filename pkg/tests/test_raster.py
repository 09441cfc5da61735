import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specdiv.hosvd import st_hosvd, t_hosvd, reconstruct
from specdiv.raster import (
    NODATA,
    BandStack,
    Layout,
    Raster,
    RasterFormatError,
    extract_bands,
    ndvi,
    read_csv,
    read_raster,
    stack_bands,
    write_csv,
    write_raster,
)


def const_raster(rows, cols, value, nodata=NODATA):
    return Raster(np.full((rows, cols), float(value)), nodata=nodata)


def smooth_pair(rows=24, cols=30, seed=70):
    """Synthetic positive RED/NIR bands with smooth structure."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:rows, 0:cols]
    red = 1000.0 + 800.0 * np.sin(0.21 * x + 0.13 * y) + rng.normal(scale=5.0, size=(rows, cols))
    nir = 3000.0 + 900.0 * np.cos(0.17 * x - 0.11 * y) + rng.normal(scale=5.0, size=(rows, cols))
    return Raster(red), Raster(nir)


class TestNdvi:
    def test_equal_bands_give_zero(self):
        out = ndvi(const_raster(2, 2, 5000.0), const_raster(2, 2, 5000.0))
        assert np.all(out.values == 0.0)

    def test_zero_sum_gives_missing(self):
        out = ndvi(const_raster(2, 2, 0.0), const_raster(2, 2, 0.0))
        assert np.all(out.values == -3000.0)

    def test_direct_value(self):
        out = ndvi(const_raster(1, 1, 1000.0), const_raster(1, 1, 3000.0))
        assert out.values[0, 0] == 0.5  # (3000 - 1000) / (3000 + 1000), exact

    def test_nodata_inputs_give_missing(self):
        red = Raster(np.array([[NODATA, 100.0]]))
        nir = Raster(np.array([[200.0, NODATA]]))
        out = ndvi(red, nir)
        assert np.all(out.values == NODATA)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            ndvi(const_raster(2, 2, 1.0), const_raster(2, 3, 1.0))

    def test_range_for_nonnegative_inputs(self):
        rng = np.random.default_rng(71)
        red = Raster(rng.uniform(0, 10000, size=(20, 20)))
        nir = Raster(rng.uniform(0, 10000, size=(20, 20)))
        out = ndvi(red, nir)
        computed = out.values[out.values != NODATA]
        assert np.all(computed >= -1.0) and np.all(computed <= 1.0)

    @settings(max_examples=50, deadline=None)
    @given(
        red=st.floats(0.001, 1e6),
        nir=st.floats(0.001, 1e6),
        scale=st.floats(0.01, 100.0),
    )
    def test_scale_invariance(self, red, nir, scale):
        base = ndvi(const_raster(1, 1, red), const_raster(1, 1, nir)).values[0, 0]
        scaled = ndvi(const_raster(1, 1, red * scale), const_raster(1, 1, nir * scale)).values[0, 0]
        assert scaled == pytest.approx(base, abs=1e-12)


class TestBandStack:
    def test_red_dup_slices(self):
        red, nir = smooth_pair()
        stack = stack_bands(red, nir, Layout.RED_DUP)
        np.testing.assert_array_equal(stack.tensor[:, :, 0], red.values)
        np.testing.assert_array_equal(stack.tensor[:, :, 1], red.values)
        np.testing.assert_array_equal(stack.tensor[:, :, 2], nir.values)

    def test_nir_dup_slices(self):
        red, nir = smooth_pair()
        stack = stack_bands(red, nir, Layout.NIR_DUP)
        np.testing.assert_array_equal(stack.tensor[:, :, 0], nir.values)
        np.testing.assert_array_equal(stack.tensor[:, :, 1], red.values)
        np.testing.assert_array_equal(stack.tensor[:, :, 2], nir.values)

    def test_ndvi_layout_first_slice(self):
        red, nir = smooth_pair()
        stack = stack_bands(red, nir, Layout.NDVI_RED_NIR)
        np.testing.assert_array_equal(stack.tensor[:, :, 0], ndvi(red, nir).values)
        np.testing.assert_array_equal(stack.tensor[:, :, 1], red.values)

    @pytest.mark.parametrize("layout", [Layout.RED_DUP, Layout.NIR_DUP, Layout.NDVI_RED_NIR])
    def test_round_trip_exact(self, layout):
        red, nir = smooth_pair()
        back_red, back_nir = extract_bands(stack_bands(red, nir, layout))
        assert back_red.values.tobytes() == red.values.tobytes()
        assert back_nir.values.tobytes() == nir.values.tobytes()

    @pytest.mark.parametrize("method", [t_hosvd, st_hosvd])
    def test_full_rank_compression_round_trip(self, method):
        red, nir = smooth_pair()
        stack = stack_bands(red, nir, Layout.RED_DUP)
        f = method(stack.tensor, stack.tensor.shape)
        back = BandStack(reconstruct(f), layout=Layout.RED_DUP)
        got_red, got_nir = extract_bands(back)
        np.testing.assert_allclose(got_red.values, red.values, rtol=1e-8)
        np.testing.assert_allclose(got_nir.values, nir.values, rtol=1e-8)

    def test_truncated_compression_loses_energy(self):
        red, nir = smooth_pair(rows=40, cols=50)
        stack = stack_bands(red, nir, Layout.RED_DUP)
        f = t_hosvd(stack.tensor, (10, 10, 2))
        got_red, got_nir = extract_bands(BandStack(reconstruct(f), layout=Layout.RED_DUP))
        assert np.linalg.norm(got_red.values - red.values) > 0
        assert np.linalg.norm(got_nir.values - nir.values) > 0


class TestRas1Format:
    def test_float_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(72)
        values = rng.normal(size=(7, 9))
        values[0, 0] = np.nan
        values[1, 2] = NODATA
        r = Raster(values, nodata=NODATA)
        path = tmp_path / "r.ras"
        write_raster(r, path)
        back = read_raster(path)
        assert back.values.tobytes() == r.values.tobytes()
        assert back.nodata == r.nodata

    def test_int16_round_trip(self, tmp_path):
        rng = np.random.default_rng(73)
        values = rng.integers(-3000, 10000, size=(5, 6)).astype(float)
        r = Raster(values)
        path = tmp_path / "i.ras"
        write_raster(r, path, dtype="int16")
        back = read_raster(path)
        np.testing.assert_array_equal(back.values, values)

    def test_int16_rejects_fractional(self, tmp_path):
        r = Raster(np.array([[0.5]]))
        with pytest.raises(ValueError, match="int16"):
            write_raster(r, tmp_path / "x.ras", dtype="int16")

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.ras"
        path.write_bytes(b"XXXX" + b"\0" * 30)
        with pytest.raises(RasterFormatError, match="byte 0"):
            read_raster(path)

    def test_unknown_dtype_code(self, tmp_path):
        path = tmp_path / "d.ras"
        write_raster(Raster(np.ones((2, 2))), path)
        data = bytearray(path.read_bytes())
        data[12] = 7
        path.write_bytes(bytes(data))
        with pytest.raises(RasterFormatError, match="byte 12"):
            read_raster(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "t.ras"
        write_raster(Raster(np.ones((3, 3))), path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(RasterFormatError, match="byte 21"):
            read_raster(path)


class TestCsv:
    def test_literal_example(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("1,2\n3,4\n")
        r = read_csv(path)
        np.testing.assert_array_equal(r.values, [[1.0, 2.0], [3.0, 4.0]])
        assert r.nodata == -3000.0

    def test_round_trip_with_header(self, tmp_path):
        rng = np.random.default_rng(74)
        r = Raster(rng.normal(size=(4, 5)), nodata=-1.0)
        path = tmp_path / "r.csv"
        write_csv(r, path)
        back = read_csv(path)
        assert back.nodata == -1.0
        assert back.values.tobytes() == r.values.tobytes()
