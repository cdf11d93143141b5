"""Closed second-moment dynamics of the cascaded source + opto-mechanical system.

The Heisenberg-Langevin equations of the six operators
``v = (a, a†, b, b†, c, c†)`` are linear, ``dv/dt = A v + noise``, so the
ordered moment matrix ``M[j, k] = <v_j v_k>`` obeys

    dM/dt = A M + M A^T + D,    D[j, k] = sum_L [L†, v_j] [v_k, L]

where ``L`` runs over the jump operators of the master equation (the cascade
term is written as ``D[sqrt(kappa) a + sqrt(gamma) c]`` plus a Hamiltonian
correction). The upper-left 4x4 block of ``A`` is the drift matrix ``K`` and
the ``a``/``c`` rows reproduce the source-forced cross-moment equations. ``D``
supplies the ordering and thermal constants that the compact ``KC + C^T K^T``
notation leaves implicit. ``docs/moment_equations.md`` lists every resulting
scalar equation.

The tracked state is twelve complex moments: eight system moments and the
four source cross moments. All other entries follow from operator
commutation (e.g. ``<ba> = <ab>``) or conjugation (e.g. ``<a†a†> = <aa>*``).
The source moments themselves are known in closed form and enter as forcing.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .integrator import solve
from .model import A, AD, B, BD, SimParams, build_drift_matrix

C, CD = 4, 5

#: tracked system moments as (row, column) positions in the 4x4 correlation matrix
CORR_ENTRIES = ((A, A), (AD, A), (A, AD), (B, B), (BD, B), (B, BD), (A, B), (A, BD))
#: tracked source cross moments <ac>, <a†c>, <bc>, <b†c>
NOISE_ENTRIES = ((A, C), (AD, C), (B, C), (BD, C))
N_CORR = len(CORR_ENTRIES)
N_TRACKED = N_CORR + len(NOISE_ENTRIES)

IMAG_TOLERANCE = 1e-8


class NoSteadyStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class SourceSpec:
    """Initial state of the source cavity: a Fock state ``|n>`` or a coherent state ``|beta>``."""

    kind: str = "fock"
    n: int = 1
    beta: complex = 0j

    def __post_init__(self):
        if self.kind not in ("fock", "coherent"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "fock":
            if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 0:
                raise ValueError(f"Fock photon number must be a non-negative integer, got {self.n!r}")
            object.__setattr__(self, "n", int(self.n))
        else:
            beta = complex(self.beta)
            if not (math.isfinite(beta.real) and math.isfinite(beta.imag)):
                raise ValueError(f"coherent amplitude must be finite, got {self.beta!r}")
            object.__setattr__(self, "beta", beta)

    @classmethod
    def fock(cls, n: int = 1) -> "SourceSpec":
        return cls(kind="fock", n=n)

    @classmethod
    def coherent(cls, beta: complex) -> "SourceSpec":
        return cls(kind="coherent", n=0, beta=beta)

    @property
    def mean_photons(self) -> float:
        return float(self.n) if self.kind == "fock" else abs(self.beta) ** 2


@dataclass(frozen=True)
class SourceMoments:
    cc: complex
    nc: float


def source_moments(s: SourceSpec, gamma: float, delta: float, t):
    """``<c^2>`` and ``<c†c>`` of the freely decaying source at time(s) ``t``.

    Accepts scalar or array ``t``; arrays give array-valued fields.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("source moments are only defined for t >= 0")
    decay = np.exp(-gamma * t_arr)
    if s.kind == "fock":
        nc = s.n * decay
        cc = np.zeros_like(t_arr, dtype=complex)
    else:
        nc = abs(s.beta) ** 2 * decay
        cc = s.beta**2 * np.exp(-(2j * delta + gamma) * t_arr)
    if t_arr.ndim == 0:
        return SourceMoments(cc=complex(cc), nc=float(nc))
    return SourceMoments(cc=cc, nc=nc)


@dataclass(frozen=True)
class MomentState:
    """Second moments at one instant.

    ``corr`` is the full 4x4 matrix ``<A_j A_k>`` over ``(a, a†, b, b†)``;
    ``noise`` holds ``(<ac>, <a†c>, <bc>, <b†c>)``.
    """

    time: float
    corr: np.ndarray
    noise: np.ndarray = field(default_factory=lambda: np.zeros(4, complex))
    source: SourceMoments = SourceMoments(0j, 0.0)

    def commutator_residuals(self) -> tuple[float, float]:
        c = self.corr
        return abs(c[A, AD] - c[AD, A] - 1), abs(c[B, BD] - c[BD, B] - 1)


def correlation_from_tracked(z: np.ndarray) -> np.ndarray:
    """Rebuild the 4x4 correlation matrix from the eight tracked system moments."""
    aa, ada, aad, bb, bdb, bbd, ab, abd = z[:N_CORR]
    return np.array(
        [
            [aa, aad, ab, abd],
            [ada, np.conj(aa), np.conj(abd), np.conj(ab)],
            [ab, np.conj(abd), bb, bbd],
            [abd, np.conj(ab), bdb, np.conj(bb)],
        ],
        dtype=complex,
    )


def tracked_from_correlation(corr: np.ndarray, noise=None) -> np.ndarray:
    z = np.zeros(N_TRACKED, dtype=complex)
    for i, (j, k) in enumerate(CORR_ENTRIES):
        z[i] = corr[j, k]
    if noise is not None:
        z[N_CORR:] = noise
    return z


def vacuum_correlation() -> np.ndarray:
    return thermal_correlation(0.0, 0.0)


def thermal_correlation(n_a: float, n_b: float) -> np.ndarray:
    """Correlation matrix of a product of thermal (or number) states; phase-insensitive entries only."""
    corr = np.zeros((4, 4), dtype=complex)
    corr[AD, A] = n_a
    corr[A, AD] = n_a + 1
    corr[BD, B] = n_b
    corr[B, BD] = n_b + 1
    return corr


def initial_state(corr: np.ndarray, source: SourceSpec, gamma: float = 0.0, delta: float = 0.0) -> MomentState:
    """State at the injection instant: system moments ``corr``, no source correlations yet."""
    return MomentState(time=0.0, corr=np.array(corr, dtype=complex), noise=np.zeros(4, complex),
                       source=source_moments(source, gamma, delta, 0.0))


def full_drift(p: SimParams) -> np.ndarray:
    """6x6 Heisenberg drift over ``(a, a†, b, b†, c, c†)``."""
    s = math.sqrt(p.gamma * p.kappa)
    a_full = np.zeros((6, 6), dtype=complex)
    a_full[:4, :4] = build_drift_matrix(p)
    a_full[A, C] = -s
    a_full[AD, CD] = -s
    a_full[C, C] = -(1j * p.delta + p.gamma / 2)
    a_full[CD, CD] = -(-1j * p.delta + p.gamma / 2)
    return a_full


def diffusion_matrix(p: SimParams) -> np.ndarray:
    """Constant terms ``D[j, k] = sum_L [L†, v_j][v_k, L]`` of the ordered moment equations."""
    d = np.zeros((6, 6), dtype=complex)
    s = math.sqrt(p.gamma * p.kappa)
    # L = sqrt(kappa) a + sqrt(gamma) c
    d[A, AD] = p.kappa
    d[C, CD] = p.gamma
    d[A, CD] = s
    d[C, AD] = s
    # L = sqrt(mu (nbar + 1)) b and L = sqrt(mu nbar) b†
    d[B, BD] = p.mu * (p.nbar + 1)
    d[BD, B] = p.mu * p.nbar
    return d


def noise_drift(p: SimParams) -> np.ndarray:
    """4x4 drift of ``(<ac>, <a†c>, <bc>, <b†c>)``.

    Without the RWA this is the printed cross-moment matrix with diagonal
    ``(-sigma, -(kappa+gamma)/2, -tau_plus, -conj(tau_minus))``. With the RWA
    the couplings follow the same red-sideband Hamiltonian as the system block.
    """
    k = build_drift_matrix(p)
    cdamp = 1j * p.delta + p.gamma / 2
    return k - cdamp * np.eye(4)


def _moment_matrix(z: np.ndarray, nc: float, cc: complex) -> np.ndarray:
    m = np.zeros((6, 6), dtype=complex)
    m[:4, :4] = correlation_from_tracked(z)
    ac, adc, bc, bdc = z[N_CORR:]
    conj = np.conj
    for row, val in ((A, ac), (AD, adc), (B, bc), (BD, bdc)):
        m[row, C] = m[C, row] = val
    # partners with c†: <a c†> = <a†c>*, <a†c†> = <ac>*, <b c†> = <b†c>*, <b†c†> = <bc>*
    for row, val in ((A, conj(adc)), (AD, conj(ac)), (B, conj(bdc)), (BD, conj(bc))):
        m[row, CD] = m[CD, row] = val
    m[C, C] = cc
    m[CD, CD] = conj(cc)
    m[CD, C] = nc
    m[C, CD] = nc + 1
    return m


_TRACKED_POSITIONS = CORR_ENTRIES + NOISE_ENTRIES


def moment_rhs(p: SimParams, z: np.ndarray, nc: float, cc: complex) -> np.ndarray:
    """Time derivative of the twelve tracked moments given the source moments."""
    a_full = full_drift(p)
    m = _moment_matrix(z, nc, cc)
    dm = a_full @ m + m @ a_full.T + diffusion_matrix(p)
    return np.array([dm[j, k] for j, k in _TRACKED_POSITIONS])


@dataclass(frozen=True)
class AffineSystem:
    """``dx/dt = m x + d(t)`` over the real and imaginary parts of the tracked moments.

    ``x`` is the tracked complex vector viewed as interleaved floats. The
    forcing is ``d0 + nc(t) u_n + Re cc(t) u_re + Im cc(t) u_im``.
    """

    params: SimParams
    source: SourceSpec
    m: np.ndarray
    d0: np.ndarray
    forcing: np.ndarray  # columns u_n, u_re, u_im

    def d(self, t: float) -> np.ndarray:
        gamma = self.params.gamma
        decay = math.exp(-gamma * t)
        if self.source.kind == "fock":
            return self.d0 + (self.source.n * decay) * self.forcing[:, 0]
        beta = self.source.beta
        cc = beta * beta * decay * complex(math.cos(2 * self.params.delta * t), -math.sin(2 * self.params.delta * t))
        return self.d0 + self.forcing @ np.array([abs(beta) ** 2 * decay, cc.real, cc.imag])

    def rhs(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.m @ x + self.d(t)


def assemble_affine_system(p: SimParams, s: SourceSpec) -> AffineSystem:
    n = 2 * N_TRACKED

    def f(x, nc=0.0, cc=0j):
        return moment_rhs(p, np.asarray(x, dtype=float).view(complex), nc, cc).view(float)

    zero = np.zeros(n)
    d0 = f(zero)
    m = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        m[:, k] = f(e) - d0
    forcing = np.column_stack([f(zero, nc=1.0) - d0, f(zero, cc=1.0) - d0, f(zero, cc=1j) - d0])
    return AffineSystem(params=p, source=s, m=m, d0=d0, forcing=forcing)


@dataclass
class MomentTrajectory:
    """Sampled solution of the moment equations."""

    times: np.ndarray
    tracked: np.ndarray  # (T, 12) complex
    params: SimParams
    source: SourceSpec
    rtol: float = 1e-9
    atol: float = 1e-12
    method: str = "adaptive"

    def __len__(self):
        return self.times.size

    def __getitem__(self, i: int) -> MomentState:
        z = self.tracked[i]
        sm = source_moments(self.source, self.params.gamma, self.params.delta, self.times[i])
        return MomentState(time=float(self.times[i]), corr=correlation_from_tracked(z),
                           noise=z[N_CORR:].copy(), source=sm)

    def moment(self, j: int, k: int) -> np.ndarray:
        """Trace of ``<A_j A_k>`` over the samples, for any of the 16 ordered pairs."""
        return np.array([correlation_from_tracked(z)[j, k] for z in self.tracked])

    @property
    def n_a(self) -> np.ndarray:
        return self.tracked[:, 1].real

    @property
    def n_b(self) -> np.ndarray:
        return self.tracked[:, 4].real

    @property
    def cross(self) -> np.ndarray:
        """``<a†c + c†a>``."""
        return 2 * self.tracked[:, N_CORR + 1].real

    @property
    def noise(self) -> np.ndarray:
        return self.tracked[:, N_CORR:]

    def source_trace(self) -> SourceMoments:
        return source_moments(self.source, self.params.gamma, self.params.delta, self.times)

    def commutator_residuals(self) -> np.ndarray:
        """Per-sample ``|<aa†> - <a†a> - 1|`` and ``|<bb†> - <b†b> - 1|``, shape (T, 2)."""
        z = self.tracked
        return np.column_stack([np.abs(z[:, 2] - z[:, 1] - 1), np.abs(z[:, 5] - z[:, 4] - 1)])

    def imag_residue(self) -> float:
        return float(np.max(np.abs(self.tracked[:, [1, 2, 4, 5]].imag), initial=0.0))


def integrate(
    sys: AffineSystem,
    init: MomentState,
    t_end: float,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-12,
    samples: int | np.ndarray = 2001,
    method: str = "adaptive",
    step: float = 1e-3,
) -> MomentTrajectory:
    """Integrate from ``init.time`` to ``t_end``.

    ``samples`` is either a count of equally spaced output times (end points
    included) or an explicit array of sample times.
    """
    if not t_end > init.time:
        raise ValueError("t_end must exceed the initial time")
    if np.ndim(samples) == 0:
        times = np.linspace(init.time, t_end, int(samples))
    else:
        times = np.asarray(samples, dtype=float)
    x0 = tracked_from_correlation(init.corr, init.noise).view(float)
    xs = solve(sys.rhs, x0, init.time, times, rtol=rel_tol, atol=abs_tol, method=method, step=step)
    tracked = np.ascontiguousarray(xs).view(complex)
    traj = MomentTrajectory(times=times, tracked=tracked, params=sys.params, source=sys.source,
                            rtol=rel_tol, atol=abs_tol, method=method)
    residue = traj.imag_residue()
    if residue > IMAG_TOLERANCE:
        warnings.warn(f"imaginary residue {residue:.3g} in number moments", RuntimeWarning, stacklevel=2)
    return traj


def steady_state(p: SimParams, nbar: float | None = None) -> np.ndarray:
    """Pre-injection fixed point of the system moments (source decoupled, ``gamma = 0``).

    Returns the 4x4 correlation matrix. Raises :class:`NoSteadyStateError` if
    the drift has an eigenvalue with non-negative real part.
    """
    q = p.replace(gamma=0.0, nbar=p.nbar if nbar is None else nbar)
    eig = np.linalg.eigvals(build_drift_matrix(q))
    if np.max(eig.real) >= 0:
        raise NoSteadyStateError(f"drift is not strictly stable (max Re eigenvalue {np.max(eig.real):.3g})")
    sys = assemble_affine_system(q, SourceSpec.fock(0))
    nc = 2 * N_CORR
    m_cc = sys.m[:nc, :nc]
    try:
        x = np.linalg.solve(m_cc, -sys.d0[:nc])
    except np.linalg.LinAlgError as exc:
        raise NoSteadyStateError(f"singular moment system: {exc}") from exc
    return correlation_from_tracked(x.view(complex))


def observables(st: MomentState) -> dict:
    """Photon number, phonon number and ``Re<a†c + c†a>``, with imaginary diagnostics."""
    n_a = st.corr[AD, A]
    n_b = st.corr[BD, B]
    imag = max(abs(n_a.imag), abs(n_b.imag))
    if imag > IMAG_TOLERANCE:
        warnings.warn(f"imaginary residue {imag:.3g} in number moments", RuntimeWarning, stacklevel=2)
    return {
        "n_a": float(n_a.real),
        "n_b": float(n_b.real),
        "re_cross": float(2 * st.noise[1].real),
        "imag_n_a": float(n_a.imag),
        "imag_n_b": float(n_b.imag),
    }
