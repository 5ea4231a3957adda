import math

import numpy as np
import numpy.typing as npt

from src.custom_types.images import FloatArray
from src.physics.atom import RamseyParams

SQRT_HALF = 1.0 / math.sqrt(2.0)


def wrap_phase(x: npt.ArrayLike) -> FloatArray:
    """Map phases onto (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2.0 * np.pi)
    # np.mod can round up to exactly 2 pi
    return np.where(wrapped <= -np.pi, wrapped + 2.0 * np.pi, wrapped)


def rotation(theta: float) -> np.ndarray:
    # [I + i(sin(theta) sx - cos(theta) sy)] / sqrt(2) in the (g1, g2) basis
    return SQRT_HALF * np.array(
        [[1.0, -np.exp(-1j * theta)], [np.exp(1j * theta), 1.0]], dtype=complex
    )


def free_evolution(phi: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [0.0, np.exp(1j * phi)]], dtype=complex)


def ramsey_sequence(theta: float, phi: float) -> tuple[float, float]:
    """Occupations (f1, f2) after R(theta) U(phi) R(0) acting on |g1>."""
    ground = np.array([1.0, 0.0], dtype=complex)
    final = rotation(theta) @ free_evolution(phi) @ rotation(0.0) @ ground
    f1, f2 = np.abs(final) ** 2
    return float(f1), float(f2)


def fringe_model(dphi_p: npt.ArrayLike, params: RamseyParams) -> FloatArray:
    return fringe_values(dphi_p, params.contrast, params.phi, params.center_shift)


def fringe_values(
    dphi_p: npt.ArrayLike, contrast: float, phi: float, center_shift: float
) -> FloatArray:
    return (1.0 + contrast * np.cos(np.asarray(dphi_p) - phi)) / 2.0 + center_shift
