"""Contour-integral helpers for entire functions of the spectral parameter."""

from __future__ import annotations

from typing import Callable

import numpy as np


def taylor_coefficients(
    func: Callable[[np.ndarray], np.ndarray],
    z0: complex,
    order: int,
    radius: float = 0.1,
    nodes: int = 32,
) -> np.ndarray:
    """Scaled derivatives ``f^(j)(z0) / j!`` for ``j = 0..order``.

    Trapezoid rule for the Cauchy integral on a circle, evaluated with one FFT.
    ``func`` must accept an array of points; it may return an array with extra
    trailing axes, in which case coefficients are returned per trailing entry.
    """
    if order >= nodes:
        raise ValueError("order must be below the number of quadrature nodes")
    angles = 2 * np.pi * np.arange(nodes) / nodes
    pts = z0 + radius * np.exp(1j * angles)
    vals = np.asarray(func(pts))
    coef = np.fft.fft(vals, axis=0) / nodes
    scale = radius ** -np.arange(order + 1, dtype=float)
    scale = scale.reshape((-1,) + (1,) * (coef.ndim - 1))
    return coef[: order + 1] * scale


def circle_residue(
    func: Callable[[np.ndarray], np.ndarray],
    center: complex,
    radius: float,
    nodes: int = 64,
) -> complex:
    """``(1/(2 pi i)) * contour integral of func`` over a circle (trapezoid rule)."""
    angles = 2 * np.pi * np.arange(nodes) / nodes
    w = radius * np.exp(1j * angles)
    vals = np.asarray(func(center + w))
    return complex(np.mean(vals * w))


def circle_moments(
    value_and_derivative: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    center: complex,
    radius: float,
    nodes: int = 64,
    count: int = 2,
) -> np.ndarray:
    """Power sums ``(1/(2 pi i)) * contour integral of z^j f'/f``, ``j < count``.

    ``j = 0`` gives the number of zeros inside the circle, ``j = 1`` their sum.
    """
    angles = 2 * np.pi * np.arange(nodes) / nodes
    w = radius * np.exp(1j * angles)
    z = center + w
    f, df = value_and_derivative(z)
    logd = np.asarray(df) / np.asarray(f)
    return np.array([np.mean(logd * w * z**j) for j in range(count)])
