from typing import Union

import numpy as np

from src.custom_types.images import FloatArray
from src.errors import DomainError
from src.physics.atom import AtomSpec, ProbePulse

ScalarOrArray = Union[float, FloatArray]


def stark_shift_two_level(omega: float, delta: float) -> float:
    """Light shift Omega^2 / (4 delta) in rad/s; follows the sign of delta."""
    if delta == 0:
        raise DomainError("detuning must be non-zero")
    return omega**2 / (4.0 * delta)


def stark_from_intensity(s: ScalarOrArray, delta_bar: ScalarOrArray) -> ScalarOrArray:
    """V_ac / (hbar Gamma) for intensity s = I/I_sat and detuning delta/Gamma."""
    if np.any(np.asarray(delta_bar) == 0):
        raise DomainError("delta_bar must be non-zero")
    return s / (8.0 * delta_bar)


def ramsey_bracket(
    delta_bar: ScalarOrArray,
    gamma: float,
    delta_g: float,
    delta_e: float,
    include_g1_coupling: bool = True,
) -> FloatArray:
    """Gamma/delta - Gamma/(2 delta_12) with delta_12 = delta - Delta_G + Delta_E."""
    delta_bar = np.asarray(delta_bar, dtype=float)
    if np.any(delta_bar == 0):
        raise DomainError("delta_bar must be non-zero")
    direct = 1.0 / delta_bar
    if not include_g1_coupling:
        return direct
    delta_12 = delta_bar * gamma - delta_g + delta_e
    if np.any(delta_12 == 0):
        raise DomainError("probe is resonant with the g1 -> e2 transition")
    return direct - gamma / (2.0 * delta_12)


def _phase(
    gamma: float, t_m: ScalarOrArray, s: ScalarOrArray, bracket: FloatArray
) -> FloatArray:
    return -(gamma / 8.0) * t_m * s * bracket


def ramsey_phase_two_level(pulse: ProbePulse, atom: AtomSpec) -> float:
    bracket = ramsey_bracket(
        pulse.delta_bar,
        atom.gamma_rad_s,
        atom.delta_g_rad_s,
        atom.delta_e_rad_s,
        include_g1_coupling=False,
    )
    return float(_phase(atom.gamma_rad_s, pulse.t_m_s, pulse.s, bracket))


def ramsey_phase_full(
    pulse: ProbePulse, atom: AtomSpec, include_g1_coupling: bool = True
) -> float:
    """Unwrapped probe phase including the off-resonant g1 -> e2 coupling."""
    bracket = ramsey_bracket(
        pulse.delta_bar,
        atom.gamma_rad_s,
        atom.delta_g_rad_s,
        atom.delta_e_rad_s,
        include_g1_coupling=include_g1_coupling,
    )
    return float(_phase(atom.gamma_rad_s, pulse.t_m_s, pulse.s, bracket))


def phase_per_saturation(
    delta_bar: ScalarOrArray, t_m_s: ScalarOrArray, atom: AtomSpec
) -> FloatArray:
    """Phase per unit I/I_sat; vectorised over delta_bar and t_m_s."""
    bracket = ramsey_bracket(
        delta_bar, atom.gamma_rad_s, atom.delta_g_rad_s, atom.delta_e_rad_s
    )
    return _phase(atom.gamma_rad_s, np.asarray(t_m_s, dtype=float), 1.0, bracket)
