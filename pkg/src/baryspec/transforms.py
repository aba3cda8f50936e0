"""Trigonometric transforms backing spectral differentiation.

Conventions, fixed here once: the forward transform is unnormalized
(X_k = sum_n x_n e^{-2pi i k n / L}) and the inverse carries the 1/L factor.
Arbitrary lengths are supported (benchmark grids use sizes like 81 and 321).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SpectrumBuffer:
    """Complex transform coefficients plus their length."""

    values: np.ndarray
    length: int


def fft(signal: np.ndarray) -> SpectrumBuffer:
    """Unnormalized discrete Fourier transform of a (possibly complex) vector."""
    signal = np.asarray(signal)
    if signal.size < 1:
        raise ValueError("fft requires length >= 1")
    out = np.fft.fft(signal)
    return SpectrumBuffer(out, signal.size)


def ifft(spectrum: SpectrumBuffer | np.ndarray) -> np.ndarray:
    """Inverse transform with 1/L normalization; ifft(fft(x)) == x."""
    values = spectrum.values if isinstance(spectrum, SpectrumBuffer) else np.asarray(spectrum)
    if values.size < 1:
        raise ValueError("ifft requires length >= 1")
    return np.fft.ifft(values)


def even_extension(values: np.ndarray) -> np.ndarray:
    """Mirror node data [u_0..u_N] into the length-2N vector [u_0..u_N, u_{N-1}..u_1]."""
    values = np.asarray(values)
    N = values.shape[-1] - 1
    if N < 1:
        raise ValueError("even_extension requires at least two values")
    return np.concatenate([values, values[..., -2:0:-1]], axis=-1)
