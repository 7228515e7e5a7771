"""Frequency and decay-rate estimation from sampled population series."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import argrelextrema


class Window(str, Enum):
    RECTANGULAR = "rectangular"
    HANN = "hann"


@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided power spectrum over angular frequency.

    ``resolution`` is the intrinsic bin width ``2 pi / (n dt)``; with zero
    padding the ``frequencies`` grid is finer by the padding factor.
    """

    frequencies: np.ndarray
    power: np.ndarray
    resolution: float
    window: Window


@dataclass(frozen=True)
class Peak:
    frequency: float
    power: float
    half_width: float


@dataclass(frozen=True)
class EnvelopeFit:
    rate: float
    intercept: float
    residual_rms: float
    n_points: int
    used_maxima: bool


def _uniform_spacing(times) -> float:
    times = np.asarray(times, dtype=float)
    steps = np.diff(times)
    if steps.size == 0 or np.any(steps <= 0):
        raise ValueError("time grid must be strictly increasing")
    dt = float(np.mean(steps))
    if np.max(np.abs(steps - dt)) > 1e-9 * max(dt, 1.0):
        raise ValueError("time grid is not uniform")
    return dt


def population_spectrum(series, times, window: Window | str = Window.HANN, pad: int = 1) -> PowerSpectrum:
    """Power spectrum of a mean-detrended real series on a uniform grid.

    Normalised so that, for the rectangular window without padding, the
    summed power equals the variance of the series.
    """
    window = Window(window)
    series = np.asarray(series, dtype=float)
    dt = _uniform_spacing(times)
    n = series.size
    if n < 64:
        raise ValueError(f"need at least 64 samples, got {n}")
    if pad < 1:
        raise ValueError("pad must be >= 1")
    x = series - series.mean()
    w = np.hanning(n) if window is Window.HANN else np.ones(n)
    n_fft = n * int(pad)
    spectrum = np.fft.rfft(x * w, n=n_fft)
    # window power normalisation keeps the total comparable to the variance
    power = np.abs(spectrum) ** 2 / (n * np.sum(w * w))
    power[1:] *= 2.0
    if n_fft % 2 == 0:
        power[-1] /= 2.0
    # padded bins oversample the same spectrum; rescale to preserve the total
    power /= pad
    freqs = 2 * np.pi * np.fft.rfftfreq(n_fft, d=dt)
    return PowerSpectrum(freqs, power, 2 * np.pi / (n * dt), window)


def _half_width(power: np.ndarray, freqs: np.ndarray, i: int) -> float:
    half = 0.5 * power[i]
    edges = []
    for direction in (-1, 1):
        j = i
        while 0 < j < power.size - 1 and power[j + direction] > half:
            j += direction
        k = j + direction
        if not 0 <= k < power.size:
            edges.append(freqs[j])
            continue
        # linear interpolation between the last bin above and the first below half maximum
        frac = (power[j] - half) / (power[j] - power[k]) if power[j] != power[k] else 0.0
        edges.append(freqs[j] + frac * (freqs[k] - freqs[j]))
    return 0.5 * abs(edges[1] - edges[0])


def extract_peaks(spectrum: PowerSpectrum, threshold_fraction: float = 0.1) -> list[Peak]:
    """Local maxima above ``threshold_fraction * max(power)``, sorted by frequency.

    Each maximum is refined by a parabola through the logarithm of the three
    bins around it, which is exact for a Gaussian-shaped line.
    """
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    p = spectrum.power
    f = spectrum.frequencies
    if p.size < 3 or not np.any(p > 0):
        return []
    top = p.max()
    # numerically flat spectra carry no peaks
    if top <= 1e-24:
        return []
    cutoff = threshold_fraction * top
    inner = np.arange(1, p.size - 1)
    is_max = (p[inner] > p[inner - 1]) & (p[inner] >= p[inner + 1]) & (p[inner] > cutoff)
    peaks = []
    for i in inner[is_max]:
        y0, y1, y2 = np.log(np.maximum(p[i - 1 : i + 2], 1e-300))
        denom = y0 - 2 * y1 + y2
        delta = 0.5 * (y0 - y2) / denom if denom < 0 else 0.0
        delta = float(np.clip(delta, -0.5, 0.5))
        step = f[1] - f[0]
        height = float(np.exp(y1 - 0.25 * (y0 - y2) * delta))
        peaks.append(Peak(float(f[i] + delta * step), height, _half_width(p, f, i)))
    return sorted(peaks, key=lambda pk: pk.frequency)


def dominant_frequency(spectrum: PowerSpectrum) -> float:
    peaks = extract_peaks(spectrum, 0.5)
    if not peaks:
        raise ValueError("spectrum has no peak")
    return max(peaks, key=lambda pk: pk.power).frequency


def fit_decay_envelope(series, times) -> EnvelopeFit:
    """Exponential rate of a decaying positive series.

    Oscillating series are fitted through their local maxima (at least five
    are required); monotonically decaying series are fitted point by point.
    The rate is minus the least-squares slope of ``log(series)``.
    """
    series = np.asarray(series, dtype=float)
    times = np.asarray(times, dtype=float)
    if series.shape != times.shape:
        raise ValueError("series and times differ in length")
    diffs = np.diff(series)
    monotone = np.all(diffs <= 0)
    if monotone:
        idx = np.arange(series.size)
        used_maxima = False
    else:
        idx = argrelextrema(series, np.greater, order=1)[0]
        used_maxima = True
        if idx.size < 5:
            raise ValueError(f"found {idx.size} local maxima; need at least 5 or a monotone series")
    values = series[idx]
    if np.any(values <= 0):
        raise ValueError("series must be positive at the fitted points")
    t = times[idx]
    slope, intercept = np.polyfit(t, np.log(values), 1)
    if slope >= 0:
        raise ValueError("series does not decay")
    resid = np.log(values) - (slope * t + intercept)
    return EnvelopeFit(-float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2))), int(idx.size), used_maxima)
