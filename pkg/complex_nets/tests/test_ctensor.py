import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from src.errors import DTypeError, FormatError, ShapeError
from src.tensor import cvt_format
from src.tensor.ctensor import CTensor, circular_normal, elementwise, full, reduce, zeros

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
complexes = st.builds(complex, finite, finite)


def ct(values, dtype="f64"):
    return CTensor.from_complex(np.asarray(values, dtype=np.complex128), dtype)


class TestElementwise:
    def test_mul(self):
        assert elementwise("mul", ct([1 + 2j]), ct([3 + 4j])).numpy()[0] == -5 + 10j

    def test_conj(self):
        assert ct([3 + 4j]).conj().numpy()[0] == 3 - 4j

    def test_angle_of_j(self):
        out = ct([1j]).angle()
        assert out.re[0] == pytest.approx(np.pi / 2)
        assert out.im[0] == 0.0

    def test_angle_of_zero_is_zero(self):
        assert ct([0j]).angle().re[0] == 0.0

    def test_angle_of_negative_real_is_pi(self):
        assert ct([complex(-1.0, -0.0)]).angle().re[0] == pytest.approx(np.pi)

    def test_abs_is_real(self):
        out = ct([3 + 4j, -5 + 12j]).abs()
        np.testing.assert_array_equal(out.re, [5.0, 13.0])
        np.testing.assert_array_equal(out.im, [0.0, 0.0])

    def test_scale_by_real_ignores_imaginary_plane(self):
        out = elementwise("scale_by_real", ct([1 + 1j]), ct([2 + 7j]))
        assert out.numpy()[0] == 2 + 2j

    def test_broadcast(self):
        out = ct(np.ones((2, 3))) + ct([1j, 2j, 3j])
        assert out.shape == (2, 3)
        np.testing.assert_array_equal(out.numpy()[1], [1 + 1j, 1 + 2j, 1 + 3j])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ct(np.ones(3)) + ct(np.ones(4))

    def test_dtype_mismatch(self):
        with pytest.raises(DTypeError):
            ct([1.0], "f32") + ct([1.0], "f64")

    def test_unknown_op(self):
        with pytest.raises(ValueError):
            elementwise("pow", ct([1.0]), ct([2.0]))

    @given(complexes, complexes)
    def test_matches_numpy(self, a, b):
        x, y = ct([a]), ct([b])
        assert (x + y).numpy()[0] == pytest.approx(a + b)
        assert (x - y).numpy()[0] == pytest.approx(a - b)
        assert (x * y).numpy()[0] == pytest.approx(a * b, rel=1e-12, abs=1e-6)


class TestReduce:
    def test_mean(self):
        assert ct([1 + 1j, 3 + 3j]).mean().item() == 2 + 2j

    def test_max_magnitude(self):
        out = reduce("max_magnitude", ct([3 + 4j, 1 + 0j]))
        assert out.item() == 5 + 0j

    def test_min_magnitude(self):
        assert reduce("min_magnitude", ct([3 + 4j, 1 + 0j])).item() == 1 + 0j

    def test_empty_reduction(self):
        with pytest.raises(ShapeError, match="empty reduction"):
            reduce("sum", ct(np.zeros((2, 0))), axes=1)

    def test_axes_and_keepdims(self):
        z = ct(np.arange(6).reshape(2, 3) * (1 + 1j))
        assert z.sum(axes=1).shape == (2,)
        assert z.sum(axes=1, keepdims=True).shape == (2, 1)
        np.testing.assert_array_equal(z.sum(axes=0).numpy(), [3 + 3j, 5 + 5j, 7 + 7j])

    def test_repeated_axis(self):
        with pytest.raises(ShapeError):
            ct(np.ones((2, 2))).sum(axes=(0, 0))


class TestCTensor:
    def test_planes_are_read_only(self):
        z = ct([1 + 1j])
        with pytest.raises(ValueError):
            z.re[0] = 5.0

    def test_sub_is_the_only_mutation(self):
        z = ct([1 + 1j])
        z.sub_(ct([0.5 + 0.5j]))
        assert z.item() == 0.5 + 0.5j

    def test_sub_shape_check(self):
        with pytest.raises(ShapeError):
            ct([1.0, 2.0]).sub_(ct([1.0]))

    def test_complex_planes_rejected(self):
        with pytest.raises(DTypeError):
            CTensor(np.array([1 + 1j]))

    def test_plane_shapes_must_agree(self):
        with pytest.raises(ShapeError):
            CTensor(np.zeros(2), np.zeros(3))

    def test_f32_rounding(self):
        z = ct([1 / 3], "f32")
        assert z.re.dtype == np.float32

    def test_strides_are_shared(self):
        z = ct(np.ones((2, 3)))
        assert z.strides == (3, 1)
        assert z.transpose().shape == (3, 2)

    def test_scalar_tensor_keeps_rank_zero(self):
        assert zeros((), "f64").shape == ()
        assert ct(np.complex128(1 + 1j)).shape == ()

    def test_factories(self, rng):
        assert zeros((2, 2), "f32").dtype == "f32"
        assert full((2,), 1 + 2j, "f64").numpy().tolist() == [1 + 2j, 1 + 2j]
        noise = circular_normal(rng, (200000,), scale=2.0, dtype="f64")
        assert np.mean(np.abs(noise.numpy()) ** 2) == pytest.approx(4.0, rel=0.02)


class TestCVTFormat:
    def test_round_trip_is_bit_exact(self, crandn):
        z = CTensor.from_complex(crandn(3, 4), "f64")
        back = cvt_format.deserialize(cvt_format.serialize(z))
        assert back.dtype == "f64"
        assert back.re.tobytes() == z.re.tobytes()
        assert back.im.tobytes() == z.im.tobytes()

    def test_f32_round_trip(self, crandn):
        z = CTensor.from_complex(crandn(5), "f32")
        back = cvt_format.deserialize(cvt_format.serialize(z))
        assert back.dtype == "f32"
        np.testing.assert_array_equal(back.numpy(), z.numpy())

    def test_scalar(self):
        data = cvt_format.serialize(CTensor.from_complex(np.complex128(2 - 3j), "f64"))
        # header + no extents + one interleaved pair
        assert len(data) == 6 + 16
        back = cvt_format.deserialize(data)
        assert back.shape == ()
        assert back.item() == 2 - 3j

    def test_layout(self):
        data = cvt_format.serialize(ct([1 + 2j], "f64"))
        assert data[:4] == b"CVT1"
        assert data[4] == 1
        assert data[5] == 1
        assert int.from_bytes(data[6:14], "little") == 1
        np.testing.assert_array_equal(np.frombuffer(data[14:], "<f8"), [1.0, 2.0])

    def test_bad_magic(self):
        data = bytearray(cvt_format.serialize(ct([1.0])))
        data[:4] = b"XXXX"
        with pytest.raises(FormatError, match="magic"):
            cvt_format.deserialize(bytes(data))

    def test_truncated(self):
        data = cvt_format.serialize(ct([1.0, 2.0]))
        with pytest.raises(FormatError, match="truncated"):
            cvt_format.deserialize(data[:-1])

    def test_trailing_bytes(self):
        with pytest.raises(FormatError):
            cvt_format.deserialize(cvt_format.serialize(ct([1.0])) + b"\x00")

    def test_unknown_dtype_code(self):
        data = bytearray(cvt_format.serialize(ct([1.0])))
        data[4] = 9
        with pytest.raises(FormatError):
            cvt_format.deserialize(bytes(data))

    def test_save_load(self, tmp_path, crandn):
        z = CTensor.from_complex(crandn(2, 2, 2), "f64")
        cvt_format.save(tmp_path / "z.cvt", z)
        np.testing.assert_array_equal(cvt_format.load(tmp_path / "z.cvt").numpy(), z.numpy())
