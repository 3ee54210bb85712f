"""Maximal-overlap discrete wavelet transform with circular boundaries.

Implements the pyramid algorithm for the undecimated transform, the additive
multiresolution analysis (detail series plus one smooth series), and the exact
inverse. All series produced have the same length as the input, the transform
is linear and circular-shift equivariant, and the multiresolution components
sum back to the input to within floating-point roundoff.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import WavecastError

__all__ = [
    "FilterPair",
    "WaveletCoefficients",
    "WaveletDecomposition",
    "haar_filters",
    "decomposition_levels",
    "modwt",
    "mra",
    "imodwt",
]

_ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class FilterPair:
    """A wavelet/scaling filter pair, already rescaled for the undecimated transform.

    The pair must have equal even length, the scaling taps must sum to 1, the
    wavelet taps to 0, and both must be orthogonal to their own even shifts.
    """

    wavelet: tuple[float, ...]
    scaling: tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.wavelet, dtype=float)
        q = np.asarray(self.scaling, dtype=float)
        if p.shape != q.shape or p.ndim != 1 or p.size < 2 or p.size % 2 != 0:
            raise WavecastError("filter pair must be two equal even-length tap vectors")
        if abs(q.sum() - 1.0) > _ORTHO_TOL:
            raise WavecastError("scaling taps must sum to 1")
        if abs(p.sum()) > _ORTHO_TOL:
            raise WavecastError("wavelet taps must sum to 0")
        for taps in (p, q):
            for shift in range(2, taps.size, 2):
                if abs(np.dot(taps[:-shift], taps[shift:])) > _ORTHO_TOL:
                    raise WavecastError("filter taps must be orthogonal to even shifts")

    @property
    def width(self) -> int:
        return len(self.wavelet)


def haar_filters() -> FilterPair:
    """Length-2 Haar pair rescaled for the undecimated transform: (1/2, -1/2) and (1/2, 1/2)."""
    return FilterPair(wavelet=(0.5, -0.5), scaling=(0.5, 0.5))


def decomposition_levels(n: int) -> int:
    """Number of decomposition levels for a series of length ``n``.

    floor(ln n), clamped to [1, floor(log2 n)] so upsampled filters stay
    shorter than the series. Requires n >= 4.
    """
    if n < 4:
        raise WavecastError(f"series too short for decomposition: n={n} < 4")
    k = int(math.floor(math.log(n)))
    return max(1, min(k, int(math.floor(math.log2(n)))))


def _max_level(n: int) -> int:
    return int(math.floor(math.log2(n)))


@dataclass(frozen=True)
class WaveletCoefficients:
    """Pyramid-algorithm output: K wavelet coefficient series and the final scaling series.

    All series have the input length; ``boundary`` is always "circular" in this
    implementation and is kept for forward compatibility.
    """

    levels: int
    wavelet_coeffs: tuple[np.ndarray, ...]
    scaling_coeffs: np.ndarray
    boundary: str
    filter: FilterPair

    @property
    def source_length(self) -> int:
        return self.scaling_coeffs.shape[0]


@dataclass(frozen=True)
class WaveletDecomposition:
    """Additive multiresolution components: K detail series plus one smooth series.

    For every t, sum_k details[k][t] + smooth[t] reproduces the source value to
    within 1e-10 absolute.
    """

    details: tuple[np.ndarray, ...]
    smooth: np.ndarray
    source_length: int
    levels: int

    def component(self, index: int) -> np.ndarray:
        """Component by flat index: 0..K-1 are details D_1..D_K, K is the smooth."""
        if index < self.levels:
            return self.details[index]
        if index == self.levels:
            return self.smooth
        raise IndexError(index)

    def component_label(self, index: int) -> str:
        return f"D{index + 1}" if index < self.levels else "SK"

    def to_csv(self, path) -> None:
        """Columnar dump (t, D_1..D_K, SK) for debugging."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"D{k + 1}" for k in range(self.levels)] + ["SK"])
            for t in range(self.source_length):
                row = [t] + [f"{d[t]!r}" for d in self.details] + [f"{self.smooth[t]!r}"]
                writer.writerow(row)


def _analysis_step(v: np.ndarray, taps: np.ndarray, stride: int) -> np.ndarray:
    # circular filtering: out[t] = sum_m taps[m] * v[(t - stride*m) mod N]
    out = taps[0] * v
    for m in range(1, taps.size):
        out = out + taps[m] * np.roll(v, stride * m)
    return out


def _synthesis_step(w: np.ndarray, v: np.ndarray, filt: FilterPair, stride: int) -> np.ndarray:
    # inverse of one pyramid stage: out[t] = sum_m p[m]*w[(t + stride*m) mod N]
    #                                      + sum_m q[m]*v[(t + stride*m) mod N]
    p = np.asarray(filt.wavelet)
    q = np.asarray(filt.scaling)
    out = p[0] * w + q[0] * v
    for m in range(1, p.size):
        out = out + p[m] * np.roll(w, -stride * m) + q[m] * np.roll(v, -stride * m)
    return out


def _check_level(n: int, levels: int) -> None:
    if n < 4:
        raise WavecastError(f"series too short to transform: n={n} < 4")
    if not 1 <= levels <= _max_level(n):
        raise WavecastError(
            f"levels={levels} outside admissible range [1, {_max_level(n)}] for n={n}"
        )


def modwt(values, levels: int, filt: FilterPair | None = None) -> WaveletCoefficients:
    """Run the pyramid algorithm on a 1-D series.

    Level-j filters are the base taps upsampled by 2**(j-1); convolution is
    circular, so every coefficient series has the input length.
    """
    y = np.asarray(values, dtype=float)
    if y.ndim != 1:
        raise WavecastError("expected a 1-D series")
    if not np.all(np.isfinite(y)):
        raise WavecastError("series contains non-finite values")
    _check_level(y.size, levels)
    if filt is None:
        filt = haar_filters()
    p = np.asarray(filt.wavelet)
    q = np.asarray(filt.scaling)

    wavelet_coeffs = []
    v = y
    for j in range(1, levels + 1):
        stride = 2 ** (j - 1)
        wavelet_coeffs.append(_analysis_step(v, p, stride))
        v = _analysis_step(v, q, stride)
    return WaveletCoefficients(
        levels=levels,
        wavelet_coeffs=tuple(wavelet_coeffs),
        scaling_coeffs=v,
        boundary="circular",
        filter=filt,
    )


def imodwt(coeffs: WaveletCoefficients) -> np.ndarray:
    """Invert the pyramid cascade; recovers the analyzed series to ~1e-10 absolute."""
    v = coeffs.scaling_coeffs
    for j in range(coeffs.levels, 0, -1):
        stride = 2 ** (j - 1)
        v = _synthesis_step(coeffs.wavelet_coeffs[j - 1], v, coeffs.filter, stride)
    return v


def _synthesize_single(coeffs: WaveletCoefficients, level: int, series: np.ndarray, is_smooth: bool) -> np.ndarray:
    # run the inverse cascade with every other coefficient series zeroed
    n = coeffs.source_length
    zero = np.zeros(n)
    v = series if is_smooth else zero
    start = coeffs.levels if is_smooth else level
    for j in range(start, 0, -1):
        stride = 2 ** (j - 1)
        w = series if (not is_smooth and j == level) else zero
        v = _synthesis_step(w, v, coeffs.filter, stride)
    return v


def mra(coeffs: WaveletCoefficients) -> WaveletDecomposition:
    """Multiresolution analysis: per-level synthesis of each coefficient series.

    Detail k is the inverse cascade applied to W_k alone; the smooth is the
    inverse cascade applied to V_K alone. By linearity the components sum to
    the analyzed series exactly.
    """
    details = tuple(
        _synthesize_single(coeffs, j, coeffs.wavelet_coeffs[j - 1], is_smooth=False)
        for j in range(1, coeffs.levels + 1)
    )
    smooth = _synthesize_single(coeffs, coeffs.levels, coeffs.scaling_coeffs, is_smooth=True)
    return WaveletDecomposition(
        details=details,
        smooth=smooth,
        source_length=coeffs.source_length,
        levels=coeffs.levels,
    )
