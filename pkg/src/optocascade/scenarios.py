"""Named parameter presets for the figure scenarios and their runners."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np
from scipy.ndimage import uniform_filter1d

from .model import SimParams
from .moments import (
    MomentTrajectory,
    SourceSpec,
    assemble_affine_system,
    initial_state,
    integrate,
    steady_state,
)

OMEGA_M = 4.4
FIGURE_PARAMS = SimParams(kappa=1.0, gamma=0.9, mu=0.001, nbar=0.0, omega_m=OMEGA_M, delta=1.02 * OMEGA_M, g=1.5)
#: mechanical damping of the reference experiment, in units of kappa
EXPERIMENT_MU = 6.5e-4

DEFAULT_T_END = 20.0
DEFAULT_SAMPLES = 2000


@dataclass(frozen=True)
class Scenario:
    name: str
    params: SimParams
    source: SourceSpec = SourceSpec.fock(1)
    nbar_init: float = 0.0
    t_end: float = DEFAULT_T_END
    samples: int = DEFAULT_SAMPLES
    description: str = ""

    def __post_init__(self):
        if not self.name:
            raise ValueError("scenario needs a name")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if int(self.samples) != self.samples or self.samples < 2:
            raise ValueError("samples must be an integer >= 2")
        if self.nbar_init < 0:
            raise ValueError("nbar_init must be non-negative")

    def with_params(self, **changes) -> "Scenario":
        return replace(self, params=self.params.replace(**changes))


@dataclass
class TimeSeries:
    times: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray
    cross: np.ndarray
    metadata: dict = field(default_factory=dict)
    trajectory: MomentTrajectory | None = None

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.n_a) == len(self.n_b) == len(self.cross) == n):
            raise ValueError("time series columns must have equal lengths")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")


def _registry() -> dict[str, Scenario]:
    fig = FIGURE_PARAMS
    caption = "nbar=0, gamma=0.9, kappa=1, mu=0.001, omega_m=4.4, Delta=1.02 omega_m"
    entries = [
        Scenario(f"fig2a-g{g}", fig.replace(g=g), description=f"cavity photon number, g={g}; {caption}")
        for g in (0.1, 0.5, 1.0, 1.5)
    ]
    entries += [
        Scenario("fig2b", fig.replace(g=1.5), description=f"photon and phonon numbers, g=1.5; {caption}"),
        Scenario("fig3", fig.replace(g=2.0), description=f"normal-mode splitting regime, g=2.0; {caption}"),
        Scenario("fig4-fock5", fig, SourceSpec.fock(5), description="source in Fock state n=5, g=1.5"),
        Scenario("fig4-coh-real", fig, SourceSpec.coherent(math.sqrt(5)),
                 description="source in coherent state beta=sqrt(5), g=1.5"),
        Scenario("fig4-coh-imag", fig, SourceSpec.coherent(1j * math.sqrt(5)),
                 description="source in coherent state beta=i sqrt(5), g=1.5"),
        Scenario("fig5", fig.replace(nbar=1000.0), nbar_init=1000.0,
                 description="thermal mechanical bath nbar=1000, g=1.5"),
        Scenario("fig5-nbar0", fig, description="zero-temperature comparison for fig5, g=1.5"),
        Scenario("experiment-mu", fig.replace(mu=EXPERIMENT_MU),
                 description="reported experimental mechanical damping mu=6.5e-4, g=1.5"),
    ]
    return {s.name: s for s in entries}


REGISTRY = MappingProxyType(_registry())

FIGURES = MappingProxyType({
    "fig2a": ("fig2a-g0.1", "fig2a-g0.5", "fig2a-g1.0", "fig2a-g1.5"),
    "fig2b": ("fig2b",),
    "fig3": ("fig3",),
    "fig4": ("fig4-fock5", "fig4-coh-real", "fig4-coh-imag"),
    "fig5": ("fig5", "fig5-nbar0"),
})


def preset(name: str) -> Scenario:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(REGISTRY)}") from None


def run_scenario(
    s: Scenario,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-12,
    method: str = "adaptive",
    step: float = 1e-3,
) -> TimeSeries:
    """Prepare the pre-injection steady state, switch the source on and integrate."""
    p = s.params
    corr0 = steady_state(p, s.nbar_init)
    init = initial_state(corr0, s.source, p.gamma, p.delta)
    traj = integrate(assemble_affine_system(p, s.source), init, s.t_end, rel_tol=rel_tol, abs_tol=abs_tol,
                     samples=s.samples, method=method, step=step)
    metadata = {
        "scenario": s.name,
        "params": p.as_dict(),
        "source": {"kind": s.source.kind, "n": s.source.n, "beta": repr(s.source.beta)},
        "nbar_init": s.nbar_init,
        "t_end": s.t_end,
        "samples": s.samples,
        "solver": {"method": method, "rtol": rel_tol, "atol": abs_tol, "step": step if method == "fixed" else None},
    }
    return TimeSeries(times=traj.times, n_a=traj.n_a, n_b=traj.n_b, cross=traj.cross, metadata=metadata,
                      trajectory=traj)


def peak_census(ts: TimeSeries | np.ndarray, window: int = 1, times=None) -> list[tuple[float, float]]:
    """Local maxima of ``n_a`` as ``(time, value)`` pairs.

    A sample is a maximum when it exceeds its left neighbour and the next
    differing sample to its right is lower; a plateau reports its first
    index. ``window > 1`` applies a centred moving average first.
    """
    if isinstance(ts, TimeSeries):
        values, times = np.asarray(ts.n_a, float), ts.times
    else:
        values = np.asarray(ts, float)
        times = np.arange(values.size) if times is None else np.asarray(times)
    if values.size < 3:
        raise ValueError("peak census needs at least three samples")
    if window > 1:
        values = uniform_filter1d(values, window, mode="nearest")
    peaks = []
    n = values.size
    i = 1
    while i < n - 1:
        if values[i] > values[i - 1]:
            j = i
            while j + 1 < n and values[j + 1] == values[i]:
                j += 1
            if j + 1 < n and values[j + 1] < values[i]:
                peaks.append((float(times[i]), float(values[i])))
            i = j + 1
        else:
            i += 1
    return peaks


def revival_count(ts: TimeSeries) -> int:
    """Maxima after the initial rise."""
    return max(0, len(peak_census(ts)) - 1)


def spectral_peaks(ts: TimeSeries, baseline: float | None = None, threshold: float = 0.05,
                   pad: int = 16) -> list[tuple[float, float]]:
    """Nonzero angular frequencies at which the ``n_a`` spectrum has a local maximum.

    The trace minus ``baseline`` (default: its first sample, the pre-injection
    value) is Hann-windowed and zero-padded ``pad``-fold before the DFT.
    Returns ``(omega, relative height)`` for maxima above ``threshold`` times
    the largest spectral magnitude.
    """
    x = np.asarray(ts.n_a, float)
    x = x - (x[0] if baseline is None else baseline)
    x = x * np.hanning(x.size)
    dt = float(ts.times[1] - ts.times[0])
    spec = np.abs(np.fft.rfft(x, n=pad * x.size))
    omega = 2 * np.pi * np.fft.rfftfreq(pad * x.size, dt)
    top = spec.max()
    out = []
    for i in range(1, spec.size - 1):
        if spec[i] > spec[i - 1] and spec[i] >= spec[i + 1] and spec[i] > threshold * top:
            out.append((float(omega[i]), float(spec[i] / top)))
    return out
