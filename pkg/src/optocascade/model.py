"""Parameter types, derived complex rates and the linearised drift matrix.

All rates and frequencies in :class:`SimParams` are dimensionless, measured in
units of the optical linewidth (``kappa = 1`` by convention). Operator vectors
are always ordered ``(a, a†, b, b†)``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

HBAR = 1.054571817e-34  # J s

#: index of each operator in the vector (a, a†, b, b†)
A, AD, B, BD = 0, 1, 2, 3


class InvalidParameterError(ValueError):
    """Raised when a parameter set violates its invariants."""


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional cavity and mirror parameters entering the bare coupling."""

    omega_c: float  # optical angular frequency, rad/s
    cavity_length: float  # m
    eff_mass: float  # kg
    omega_m_phys: float  # mechanical angular frequency, rad/s

    def __post_init__(self):
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{field.name} must be positive, got {value!r}")


@dataclass(frozen=True)
class SimParams:
    """One configuration of the pumped cavity, the mirror and the source cavity.

    ``kappa`` is allowed to be zero so that lossless test cases can be built;
    every other rate follows the usual non-negativity constraints.
    """

    kappa: float = 1.0
    gamma: float = 0.9
    mu: float = 0.001
    nbar: float = 0.0
    omega_m: float = 4.4
    delta: float = 1.02 * 4.4
    g: float = 1.5
    rwa: bool = False

    def __post_init__(self):
        for name in ("kappa", "gamma", "mu", "nbar", "omega_m", "delta", "g"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidParameterError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        for name in ("kappa", "gamma", "mu", "nbar", "g"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        if self.omega_m <= 0:
            raise InvalidParameterError(f"omega_m must be positive, got {self.omega_m!r}")
        if not isinstance(self.rwa, (bool, np.bool_)):
            raise InvalidParameterError(f"rwa must be a boolean, got {self.rwa!r}")

    def replace(self, **changes) -> "SimParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class DerivedRates:
    kappa_t: complex
    mu_t: complex
    sigma: complex
    tau_plus: complex
    tau_minus: complex


def derived_rates(p: SimParams) -> DerivedRates:
    return DerivedRates(
        kappa_t=complex(p.kappa / 2, p.delta),
        mu_t=complex(p.mu / 2, p.omega_m),
        sigma=complex((p.kappa + p.gamma) / 2, 2 * p.delta),
        tau_plus=complex((p.mu + p.gamma) / 2, p.omega_m + p.delta),
        tau_minus=complex((p.mu + p.gamma) / 2, p.omega_m - p.delta),
    )


@dataclass(frozen=True)
class NormalModes:
    omega_plus: complex
    omega_minus: complex
    oscillatory: bool


def bare_coupling(p: PhysicalParams) -> float:
    """Single-photon radiation-pressure coupling ``(omega_c / L) sqrt(hbar / (m omega_m))``."""
    return p.omega_c / p.cavity_length * math.sqrt(HBAR / (p.eff_mass * p.omega_m_phys))


def effective_coupling(G: float, alpha0: float) -> float:
    """Pump-enhanced coupling ``g = G * alpha0`` for a real intracavity amplitude."""
    if not math.isfinite(alpha0) or alpha0 < 0:
        raise InvalidParameterError(f"alpha0 must be a non-negative real amplitude, got {alpha0!r}")
    if not math.isfinite(G) or G < 0:
        raise InvalidParameterError(f"G must be non-negative, got {G!r}")
    return G * alpha0


def coupling_pattern(rwa: bool) -> np.ndarray:
    """Sign pattern of the ``i g`` couplings in the Heisenberg drift.

    Entry ``[j, k]`` is the coefficient ``s`` such that ``d A_j / dt`` contains
    ``s * i g * A_k``. The red-sideband variant keeps only the ``a <-> b`` and
    ``a† <-> b†`` exchange terms.
    """
    pattern = np.array(
        [
            [0, 0, -1, -1],
            [0, 0, 1, 1],
            [-1, -1, 0, 0],
            [1, 1, 0, 0],
        ],
        dtype=float,
    )
    if rwa:
        # drop the entries generated by the ab and a†b† terms
        for j, k in ((A, BD), (AD, B), (B, AD), (BD, A)):
            pattern[j, k] = 0.0
    return pattern


def build_drift_matrix(p: SimParams) -> np.ndarray:
    """4x4 Heisenberg drift over ``(a, a†, b, b†)``; the damped linearised dynamics is ``dA/dt = K A``."""
    r = derived_rates(p)
    k = 1j * p.g * coupling_pattern(p.rwa).astype(complex)
    k[np.diag_indices(4)] = [-r.kappa_t, -r.kappa_t.conjugate(), -r.mu_t, -r.mu_t.conjugate()]
    return k


def normal_mode_frequencies(p: SimParams) -> NormalModes:
    d2 = p.delta**2
    w2 = p.omega_m**2
    disc = (d2 - w2) ** 2 + 16 * p.g**2 * p.delta * p.omega_m
    root = np.sqrt(complex(disc))
    plus_sq = 0.5 * (d2 + w2 + root)
    # product form avoids cancellation near threshold: w+^2 w-^2 = D wm (D wm - 4 g^2)
    minus_sq = p.delta * p.omega_m * (p.delta * p.omega_m - 4 * p.g**2) / plus_sq
    if minus_sq.real > plus_sq.real:
        # degenerate modes: the two forms differ by rounding only
        minus_sq = plus_sq
    return NormalModes(
        omega_plus=complex(np.sqrt(plus_sq)),
        omega_minus=complex(np.sqrt(minus_sq)),
        oscillatory=is_oscillatory(p),
    )


def is_oscillatory(p: SimParams) -> bool:
    return 4 * p.g**2 <= p.delta * p.omega_m


def is_strong_coupling(p: SimParams) -> bool:
    """Normal-mode splitting survives damping once ``g`` exceeds the cavity linewidth."""
    return p.g > p.kappa
