import ast
import inspect
import math
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sensorpress import codec
from sensorpress.codec import (
    BadMagicError,
    CompressedFrame,
    DimensionMismatchError,
    ErrorBoundConfig,
    InputError,
    PopcountMismatchError,
    ResidualCode,
    TruncatedFrameError,
    compress,
    compress_instrumented,
    decompress,
    deserialize,
    frame_nbytes,
    iter_frames,
    residual_code,
    residual_expand,
    serialize,
)

from conftest import random_params


def algorithm2_oracle(frame, params):
    """Straight-line decoder written from the algorithm, scalar arithmetic only."""
    L, K = params.L, params.K
    sigma = params.sigma.sigma
    W = params.W_dec.tolist()
    b = params.b_dec.tolist()
    y = [float(v) for v in frame.y]
    m = float(frame.m)
    flags = frame.residuals.indicator.tolist()
    stored = [float(v) for v in frame.residuals.values]
    out, nxt = [], 0
    for j in range(L):
        acc = b[j]
        for k in range(K):
            acc += W[j][k] * y[k]
        d_hat = 1.0 / (1.0 + math.exp(-acc))
        x = (3.0 * sigma / 0.4) * (d_hat - 0.5) + m
        if flags[j]:
            x += stored[nxt]
            nxt += 1
        else:
            x += 0.0
        out.append(x)
    return np.array(out)


def random_frame(r, L=None, K=None):
    L = L or int(r.integers(1, 100))
    K = K or int(r.integers(1, 30))
    mask = r.random(L) < r.random()
    return CompressedFrame(
        r.normal(size=K).astype(np.float32),
        ResidualCode(mask, r.normal(size=int(mask.sum())).astype(np.float32)),
        np.float32(r.normal() * 10),
    )


# -- residual code -------------------------------------------------------------

def test_residual_code_example():
    c = residual_code(np.array([0.5, 2.0, -3.0]), 1.0)
    assert c.indicator.tolist() == [False, True, True]
    assert c.values.tolist() == [2.0, -3.0]


def test_residual_code_empty_and_full():
    assert residual_code(np.array([0.1, -0.2]), 5.0).count == 0
    c = residual_code(np.array([0.0, 1e-30, -2.0, 0.0]), 0.0)
    assert c.indicator.tolist() == [False, True, True, False]


def test_residual_expand():
    r = np.array([0.5, 2.0, -3.0, 0.25])
    np.testing.assert_array_equal(residual_expand(residual_code(r, 1.0), 4), [0, 2.0, -3.0, 0])
    np.testing.assert_array_equal(residual_expand(ResidualCode.empty(3), 3), 0.0)


def test_residual_expand_errors():
    with pytest.raises(DimensionMismatchError):
        residual_expand(ResidualCode.empty(3), 4)
    bad = ResidualCode.__new__(ResidualCode)
    object.__setattr__(bad, "indicator", np.array([True, True]))
    object.__setattr__(bad, "values", np.zeros(1, np.float32))
    with pytest.raises(PopcountMismatchError):
        residual_expand(bad, 2)


@given(st.integers(0, 100_000), st.floats(0, 3))
def test_expand_code_exhaustive(seed, eps):
    r = np.random.default_rng(seed).normal(size=50).astype(np.float32).astype(np.float64)
    out = residual_expand(residual_code(r, eps), 50)
    for j in range(50):
        if abs(r[j]) > eps:
            assert out[j] == r[j]
        else:
            assert out[j] == 0.0


def test_error_bound_config():
    assert not ErrorBoundConfig(math.inf).bounded
    assert ErrorBoundConfig(0.0).bounded
    for bad in (-1.0, math.nan, -math.inf):
        with pytest.raises(ValueError):
            ErrorBoundConfig(bad)


# -- compress / decompress ------------------------------------------------------

def test_constant_vector():
    p = random_params(12, 3, seed=2, sigma=1.5)
    x = np.full(12, 4.25)
    f = compress(x, p, 0.1)
    assert f.m == np.float32(4.25)
    expected_p = decompress(CompressedFrame(f.y, ResidualCode.empty(12), f.m), p)
    big = np.abs(x - expected_p) > 0.1
    np.testing.assert_array_equal(f.residuals.indicator, big)


def test_unbounded_has_no_residuals(rng):
    p = random_params(20, 4, seed=1)
    for cfg in (None, math.inf, ErrorBoundConfig(None)):
        f = compress(rng.normal(size=20), p, cfg)
        assert f.residuals.count == 0
        assert f.residuals.L == 20


def test_empty_code_decodes_to_prediction(rng):
    p = random_params(20, 4, seed=1)
    f = compress(rng.normal(size=20), p, None)
    np.testing.assert_array_equal(decompress(f, p), algorithm2_oracle(f, p))


@pytest.mark.parametrize("L", [23, 90])
@pytest.mark.parametrize("eps", [0.05, 0.1, 1.0])
def test_error_bound_random(L, eps):
    r = np.random.default_rng(L)
    for t in range(50):
        p = random_params(L, 5, seed=t, sigma=float(r.uniform(0.3, 3)))
        x = r.normal(0, 2, L) + r.normal() * 5
        x_hat = decompress(deserialize(serialize(compress(x, p, eps))), p)
        assert np.max(np.abs(x - x_hat)) <= eps


def test_epsilon_zero_within_residual_rounding(rng):
    p = random_params(30, 4, seed=7)
    x = rng.normal(size=30)
    f = compress(x, p, 0.0)
    err = np.abs(x - decompress(f, p))
    # every entry was sent, so error is the f32 rounding of its residual
    ind = f.residuals.indicator
    assert np.all(err[ind] <= np.spacing(np.abs(f.residuals.values)).astype(float) * 2)
    assert np.all(err[~ind] == 0.0)


def test_input_errors():
    p = random_params(8, 2)
    with pytest.raises(InputError):
        compress(np.zeros(7), p)
    x = np.zeros(8)
    x[3] = np.nan
    with pytest.raises(InputError):
        compress(x, p)


def test_decompress_dimension_mismatch(rng):
    f = compress(rng.normal(size=8), random_params(8, 2), 0.1)
    with pytest.raises(DimensionMismatchError):
        decompress(f, random_params(8, 3))


def test_oracle_equivalence(rng):
    for t in range(30):
        L = int(rng.choice([23, 90, 720]))
        p = random_params(L, int(rng.integers(1, 21)), seed=t, sigma=float(rng.uniform(0.5, 5)))
        f = compress(rng.normal(0, 3, L), p, float(rng.choice([0.0, 0.1, 1.0])))
        assert decompress(f, p).tobytes() == algorithm2_oracle(f, p).tobytes()


@given(st.integers(0, 10_000))
def test_bits_monotone_in_epsilon(seed):
    r = np.random.default_rng(seed)
    p = random_params(40, 4, seed=seed % 17)
    x = r.normal(0, 2, 40)
    sizes = [len(serialize(compress(x, p, e))) for e in (0.0, 0.01, 0.1, 0.5, 1.0, 3.0, None)]
    assert all(b <= a for a, b in zip(sizes, sizes[1:]))
    assert sizes[-1] == frame_nbytes(40, 4, 0)


def test_decoder_weights_matter(rng):
    p = random_params(10, 3, seed=5)
    f = compress(rng.normal(size=10), p, None)
    base = decompress(f, p)
    for name in ("W_dec", "b_dec"):
        arr = getattr(p, name).copy()
        arr.flat[0] += 50.0
        q = type(p)(**{**{n: getattr(p, n) for n in ("W_enc", "b_enc", "W_dec", "b_dec")},
                       name: arr}, sigma=p.sigma)
        assert not np.array_equal(decompress(f, q), base)
    q = p.with_sigma(type(p.sigma)(p.sigma.sigma * 2))
    assert not np.array_equal(decompress(f, q), base)


def test_operation_counts_scale_with_lk(rng):
    def muls(L, K, eps):
        p = random_params(L, K, seed=0)
        return compress_instrumented(rng.normal(size=L), p, eps).mul

    # encoder: L*K products, L for the normalisation gain, 1 for the mean
    for L, K in ((40, 4), (80, 8)):
        assert muls(L, K, None) == L * K + L + 1
        # bounded: the decoder pass adds L*K products and L for denormalising
        assert muls(L, K, 0.1) == 2 * L * K + 2 * L + 1


def test_codec_uses_only_elementary_operations():
    # linear operations, comparisons and the logistic function; no
    # transcendental besides exp inside the sigmoid
    src = inspect.getsource(codec._prediction) + inspect.getsource(codec.compress)
    names = {n.attr for n in ast.walk(ast.parse(src)) if isinstance(n, ast.Attribute)}
    assert not names & {"log", "sqrt", "sin", "cos", "tanh", "power", "divide"}


# -- wire format -------------------------------------------------------------

def test_empty_frame_size():
    f = CompressedFrame(np.zeros(20, np.float32), ResidualCode.empty(720), 0.0)
    assert len(serialize(f)) == 4 + 4 + 4 + 4 + 80 + 90 == 186 == frame_nbytes(720, 20)


def test_layout_fields():
    mask = np.zeros(11, bool)
    mask[[0, 9]] = True
    f = CompressedFrame(np.array([1.5, -2.0], np.float32),
                        ResidualCode(mask, np.array([0.25, -4.0], np.float32)), 3.0)
    buf = serialize(f)
    assert buf[:4] == b"CFR1"
    assert struct.unpack_from("<IIf", buf, 4) == (11, 2, 3.0)
    assert struct.unpack_from("<2f", buf, 16) == (1.5, -2.0)
    assert buf[24:26] == bytes([0b00000001, 0b00000010])
    assert struct.unpack_from("<2f", buf, 26) == (0.25, -4.0)
    assert len(buf) == 34


def test_roundtrip_identity(rng):
    for _ in range(200):
        f = random_frame(rng)
        assert deserialize(serialize(f)) == f
        assert serialize(deserialize(serialize(f))) == serialize(f)


def test_bad_magic(rng):
    buf = bytearray(serialize(random_frame(rng)))
    buf[1] ^= 0xFF
    with pytest.raises(BadMagicError):
        deserialize(bytes(buf))


def test_truncated(rng):
    f = random_frame(rng, L=40, K=5)
    while f.residuals.count == 0:
        f = random_frame(rng, L=40, K=5)
    buf = serialize(f)
    for cut in (3, 10, 16, 30, len(buf) - 1):
        with pytest.raises(TruncatedFrameError):
            deserialize(buf[:cut])


def test_popcount_mismatch(rng):
    f = random_frame(rng, L=13, K=2)
    buf = serialize(f)
    with pytest.raises(PopcountMismatchError):
        deserialize(buf + b"\x00\x00\x00\x00")
    # set a padding bit past L in the last indicator byte
    bad = bytearray(buf)
    bad[16 + 8 + 1] |= 0x80
    with pytest.raises(PopcountMismatchError):
        deserialize(bytes(bad))


def test_dimension_check_on_deserialize(rng):
    buf = serialize(random_frame(rng, L=10, K=3))
    deserialize(buf, L=10, K=3)
    with pytest.raises(DimensionMismatchError):
        deserialize(buf, L=10, K=4)


def test_iter_frames(rng):
    frames = [random_frame(rng) for _ in range(20)]
    back = list(iter_frames(b"".join(serialize(f) for f in frames)))
    assert back == frames


def test_error_variants_are_distinct():
    kinds = {BadMagicError, TruncatedFrameError, PopcountMismatchError}
    assert len(kinds) == 3
    assert all(issubclass(k, codec.FrameError) for k in kinds)
