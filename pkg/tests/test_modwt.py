import numpy as np
import pytest

from wavecast.errors import WavecastError
from wavecast.modwt import (
    FilterPair,
    decomposition_levels,
    haar_filters,
    imodwt,
    modwt,
    mra,
)


# --- brute-force oracles, independent of the production np.roll path ---

def circ_filter_oracle(signal, taps, stride):
    """out[t] = sum_m taps[m] * signal[(t - stride*m) mod N], by explicit loops."""
    n = len(signal)
    out = np.zeros(n)
    for t in range(n):
        for m, tap in enumerate(taps):
            out[t] += tap * signal[(t - stride * m) % n]
    return out


def synth_filter_oracle(w, v, filt, stride):
    n = len(w)
    out = np.zeros(n)
    for t in range(n):
        for m in range(len(filt.wavelet)):
            out[t] += filt.wavelet[m] * w[(t + stride * m) % n]
            out[t] += filt.scaling[m] * v[(t + stride * m) % n]
    return out


def test_haar_filters_definition():
    f = haar_filters()
    assert f.wavelet == (0.5, -0.5)
    assert abs(sum(f.scaling) - 1.0) < 1e-15
    assert abs(np.dot(f.wavelet, f.scaling)) < 1e-15


def test_filter_pair_validation():
    with pytest.raises(WavecastError):
        FilterPair(wavelet=(0.5, -0.5), scaling=(0.4, 0.4))  # scaling sum != 1
    with pytest.raises(WavecastError):
        FilterPair(wavelet=(0.5, 0.5), scaling=(0.5, 0.5))  # wavelet sum != 0
    with pytest.raises(WavecastError):
        FilterPair(wavelet=(0.5, -0.5, 0.0), scaling=(0.5, 0.5, 0.0))  # odd length


def test_decomposition_levels():
    assert decomposition_levels(9000) == 9  # ln 9000 ~ 9.105, log2 9000 ~ 13.1
    assert decomposition_levels(4) == 1
    assert decomposition_levels(512) == 6
    with pytest.raises(WavecastError):
        decomposition_levels(3)


def test_modwt_impulse_level1():
    coeffs = modwt([1.0, 0.0, 0.0, 0.0], levels=1)
    np.testing.assert_allclose(coeffs.wavelet_coeffs[0], [0.5, -0.5, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(coeffs.scaling_coeffs, [0.5, 0.5, 0.0, 0.0], atol=1e-15)


def test_modwt_matches_bruteforce_convolution():
    rng = np.random.default_rng(7)
    y = rng.normal(size=32)
    filt = haar_filters()
    coeffs = modwt(y, levels=3, filt=filt)
    v = y
    for j in range(1, 4):
        stride = 2 ** (j - 1)
        w_ref = circ_filter_oracle(v, filt.wavelet, stride)
        v = circ_filter_oracle(v, filt.scaling, stride)
        np.testing.assert_allclose(coeffs.wavelet_coeffs[j - 1], w_ref, atol=1e-12)
    np.testing.assert_allclose(coeffs.scaling_coeffs, v, atol=1e-12)


def test_modwt_constant_series():
    coeffs = modwt(np.full(16, 3.7), levels=4)
    for w in coeffs.wavelet_coeffs:
        np.testing.assert_allclose(w, 0.0, atol=1e-14)
    np.testing.assert_allclose(coeffs.scaling_coeffs, 3.7, atol=1e-12)


def test_modwt_energy_identity():
    rng = np.random.default_rng(11)
    y = rng.normal(size=64)
    coeffs = modwt(y, levels=3)
    # direct-summation oracle for both sides
    energy = sum(float(np.sum(w * w)) for w in coeffs.wavelet_coeffs)
    energy += float(np.sum(coeffs.scaling_coeffs * coeffs.scaling_coeffs))
    ref = float(np.sum(y * y))
    assert abs(energy - ref) <= 1e-10 * ref


def test_modwt_level_range_errors():
    y = np.arange(16.0)
    with pytest.raises(WavecastError):
        modwt(y, levels=0)
    with pytest.raises(WavecastError):
        modwt(y, levels=5)  # floor(log2 16) = 4


def test_mra_impulse_handoff():
    y = [1.0, 0.0, 0.0, 0.0]
    coeffs = modwt(y, levels=1)
    dec = mra(coeffs)
    # brute-force synthesis oracle per component
    zero = np.zeros(4)
    d1_ref = synth_filter_oracle(np.asarray(coeffs.wavelet_coeffs[0]), zero, coeffs.filter, 1)
    s1_ref = synth_filter_oracle(zero, np.asarray(coeffs.scaling_coeffs), coeffs.filter, 1)
    np.testing.assert_allclose(dec.details[0], d1_ref, atol=1e-14)
    np.testing.assert_allclose(dec.smooth, s1_ref, atol=1e-14)
    np.testing.assert_allclose(dec.details[0] + dec.smooth, y, atol=1e-12)
    # hand-computed values
    np.testing.assert_allclose(dec.details[0], [0.5, -0.25, 0.0, -0.25], atol=1e-15)
    np.testing.assert_allclose(dec.smooth, [0.5, 0.25, 0.0, 0.25], atol=1e-15)


def test_mra_constant_series():
    coeffs = modwt(np.full(32, 2.5), levels=3)
    dec = mra(coeffs)
    for d in dec.details:
        np.testing.assert_allclose(d, 0.0, atol=1e-13)
    np.testing.assert_allclose(dec.smooth, 2.5, atol=1e-12)


def test_mra_additive_identity_random():
    rng = np.random.default_rng(3)
    for n, k in [(8, 2), (100, 4), (257, 5)]:
        y = rng.normal(size=n) * 10
        dec = mra(modwt(y, levels=k))
        recon = np.sum(dec.details, axis=0) + dec.smooth
        assert np.max(np.abs(recon - y)) < 1e-10


def test_imodwt_roundtrip():
    rng = np.random.default_rng(5)
    y = rng.normal(size=128)
    back = imodwt(modwt(y, levels=4))
    assert np.max(np.abs(back - y)) < 1e-10


def test_imodwt_zero_and_linearity():
    rng = np.random.default_rng(9)
    y1, y2 = rng.normal(size=64), rng.normal(size=64)
    c1, c2 = modwt(y1, levels=3), modwt(y2, levels=3)
    zeros = modwt(np.zeros(64) + 0.0, levels=3)
    np.testing.assert_allclose(imodwt(zeros), 0.0, atol=1e-14)
    # imodwt(a*C1 + b*C2) = a*imodwt(C1) + b*imodwt(C2), combining coefficients directly
    a, b = 2.5, -1.25
    combined = type(c1)(
        levels=3,
        wavelet_coeffs=tuple(a * w1 + b * w2 for w1, w2 in zip(c1.wavelet_coeffs, c2.wavelet_coeffs)),
        scaling_coeffs=a * c1.scaling_coeffs + b * c2.scaling_coeffs,
        boundary="circular",
        filter=c1.filter,
    )
    lhs = imodwt(combined)
    rhs = a * imodwt(c1) + b * imodwt(c2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_shift_equivariance():
    rng = np.random.default_rng(13)
    y = rng.normal(size=48)
    shift = 7
    dec = mra(modwt(y, levels=3))
    dec_shifted = mra(modwt(np.roll(y, shift), levels=3))
    for d, ds in zip(dec.details, dec_shifted.details):
        np.testing.assert_allclose(np.roll(d, shift), ds, atol=1e-10)
    np.testing.assert_allclose(np.roll(dec.smooth, shift), dec_shifted.smooth, atol=1e-10)


def test_decomposition_csv_dump(tmp_path):
    y = np.arange(8.0)
    dec = mra(modwt(y, levels=2))
    path = tmp_path / "dec.csv"
    dec.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,D1,D2,SK"
    assert len(lines) == 9
