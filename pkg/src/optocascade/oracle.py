"""Brute-force cascaded master equation on a truncated three-mode Fock space.

Basis ordering is ``|n_a, n_b, n_c>`` with the source index ``n_c`` varying
fastest. Density matrices are vectorised row-major, so
``vec(X rho Y) = kron(X, Y.T) vec(rho)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .integrator import solve
from .model import SimParams
from .moments import SourceSpec


class TruncationError(RuntimeError):
    """The Fock cutoffs are too small for the requested run."""


@dataclass(frozen=True)
class TruncationSpec:
    n_a_max: int = 5
    n_b_max: int = 5
    n_c_max: int = 1
    max_dim: int = 20000

    def __post_init__(self):
        for name in ("n_a_max", "n_b_max", "n_c_max"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ValueError(f"{name} must be an integer >= 1")
        if self.dim > self.max_dim:
            raise TruncationError(f"Hilbert-space dimension {self.dim} exceeds the limit {self.max_dim}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_a_max + 1, self.n_b_max + 1, self.n_c_max + 1)

    @property
    def dim(self) -> int:
        na, nb, nc = self.shape
        return na * nb * nc


def _destroy(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr", dtype=complex)


@dataclass(frozen=True)
class ModeOperators:
    a: sp.csr_matrix
    b: sp.csr_matrix
    c: sp.csr_matrix
    eye: sp.csr_matrix

    @classmethod
    def build(cls, tr: TruncationSpec) -> "ModeOperators":
        na, nb, nc = tr.shape
        ia, ib, ic = (sp.identity(n, dtype=complex, format="csr") for n in (na, nb, nc))
        a = sp.kron(sp.kron(_destroy(na), ib), ic, format="csr")
        b = sp.kron(sp.kron(ia, _destroy(nb)), ic, format="csr")
        c = sp.kron(sp.kron(ia, ib), _destroy(nc), format="csr")
        return cls(a=a, b=b, c=c, eye=sp.identity(tr.dim, dtype=complex, format="csr"))

    def get(self, name: str) -> sp.csr_matrix:
        name = name.replace("†", "d")
        base = {"a": self.a, "b": self.b, "c": self.c}
        if name in base:
            return base[name]
        if len(name) == 2 and name[1] == "d" and name[0] in base:
            return base[name[0]].conj().T.tocsr()
        raise KeyError(name)


_ALIASES = {
    "n_a": "ad a",
    "n_b": "bd b",
    "n_c": "cd c",
    "cc": "c c",
    "ac": "a c",
    "adc": "ad c",
    "bc": "b c",
    "bdc": "bd c",
    "aa": "a a",
    "aad": "a ad",
    "bb": "b b",
    "bbd": "b bd",
    "ab": "a b",
    "abd": "a bd",
}


@dataclass
class Liouvillian:
    """Generator of the cascaded master equation.

    ``apply`` acts on a density matrix directly; ``superoperator`` is the
    sparse matrix acting on ``vec(rho)`` and is only built when the
    Hilbert-space dimension is small enough.
    """

    params: SimParams
    trunc: TruncationSpec
    ops: ModeOperators
    hamiltonian: sp.csr_matrix
    collapse: list = field(default_factory=list)  # (rate, operator)
    cascade: float = 0.0
    superop_max_dim: int = 2000
    _h_eff: sp.csr_matrix | None = None
    _super: sp.csr_matrix | None = None

    def __post_init__(self):
        a, c = self.ops.a, self.ops.c
        h_eff = self.hamiltonian.copy()
        for rate, op in self.collapse:
            h_eff = h_eff - 0.5j * rate * (op.conj().T @ op)
        # -s (a†c rho + rho c†a) of the cascade term folded into the non-Hermitian part
        h_eff = h_eff - 1j * self.cascade * (a.conj().T @ c)
        self._h_eff = h_eff.tocsr()
        self._h_eff_dag = self._h_eff.conj().T.tocsr()
        self._jumps = [(rate, op, op.conj().T.tocsr()) for rate, op in self.collapse if rate != 0]
        self._ad = a.conj().T.tocsr()
        self._cd = c.conj().T.tocsr()

    @property
    def dim(self) -> int:
        return self.trunc.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self._h_eff @ rho - (self._h_eff_dag.T @ rho.T).T)
        for rate, op, op_dag in self._jumps:
            out += rate * (op @ (op_dag.T @ rho.T).T)
        if self.cascade:
            a, c = self.ops.a, self.ops.c
            out += self.cascade * (c @ (self._ad.T @ rho.T).T + a @ (self._cd.T @ rho.T).T)
        return out

    @property
    def superoperator(self) -> sp.csr_matrix:
        if self._super is None:
            if self.dim > self.superop_max_dim:
                raise TruncationError(f"dimension {self.dim} too large for an explicit superoperator")
            eye = self.ops.eye

            def sandwich(x, y):
                # vec(x rho y) for row-major vectorisation
                return sp.kron(x, y.T, format="csr")

            lv = -1j * (sandwich(self._h_eff, eye) - sandwich(eye, self._h_eff_dag))
            for rate, op, op_dag in self._jumps:
                lv = lv + rate * sandwich(op, op_dag)
            if self.cascade:
                lv = lv + self.cascade * (sandwich(self.ops.c, self._ad) + sandwich(self.ops.a, self._cd))
            self._super = lv.tocsr()
        return self._super


def build_liouvillian(p: SimParams, tr: TruncationSpec, superop_max_dim: int = 2000) -> Liouvillian:
    """Every term of the cascaded master equation in the pump interaction picture."""
    ops = ModeOperators.build(tr)
    a, b, c = ops.a, ops.b, ops.c
    ad, bd, cd = (x.conj().T for x in (a, b, c))
    if p.rwa:
        coupling = a @ bd + ad @ b
    else:
        coupling = (a + ad) @ (b + bd)
    h = p.delta * (ad @ a) + p.omega_m * (bd @ b) + p.g * coupling + p.delta * (cd @ c)
    collapse = [
        (p.kappa, a),
        (p.gamma, c),
        (p.mu * (p.nbar + 1), b),
        (p.mu * p.nbar, bd.tocsr()),
    ]
    return Liouvillian(params=p, trunc=tr, ops=ops, hamiltonian=sp.csr_matrix(h), collapse=collapse,
                       cascade=math.sqrt(p.gamma * p.kappa), superop_max_dim=superop_max_dim)


# -- states ---------------------------------------------------------------


def _fock_vector(n: int, dim: int) -> np.ndarray:
    if n >= dim:
        raise TruncationError(f"Fock level {n} is not retained (cutoff {dim - 1})")
    v = np.zeros(dim, complex)
    v[n] = 1.0
    return v


def _coherent_vector(beta: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    mag = np.exp(-abs(beta) ** 2 / 2 + n * np.log(abs(beta) + (beta == 0)) - 0.5 * log_fact)
    if beta == 0:
        mag = (n == 0).astype(float)
    v = mag * np.exp(1j * np.angle(beta) * n)
    return v / np.linalg.norm(v)


def thermal_populations(nbar: float, dim: int) -> np.ndarray:
    """Normalised thermal populations restricted to ``dim`` levels."""
    if nbar == 0:
        pops = np.zeros(dim)
        pops[0] = 1.0
        return pops
    r = nbar / (nbar + 1)
    pops = r ** np.arange(dim)
    return pops / pops.sum()


def source_cutoff(s: SourceSpec, tail: float = 1e-6) -> int:
    """Smallest ``n_c_max`` that holds the source state with the Poisson tail below ``tail``."""
    if s.kind == "fock":
        return max(1, s.n)
    lam = abs(s.beta) ** 2
    n, cdf, term = 0, math.exp(-lam), math.exp(-lam)
    while 1 - cdf >= tail:
        n += 1
        term *= lam / n
        cdf += term
    return max(1, n)


def product_state(tr: TruncationSpec, source: SourceSpec, n_a: int = 0, nbar_b: float = 0.0,
                  n_b: int | None = None) -> np.ndarray:
    """``|n_a><n_a| (x) rho_b (x) |source><source|`` with ``rho_b`` thermal (or a number state)."""
    na, nb, nc = tr.shape
    rho_a = np.outer(*(2 * [_fock_vector(n_a, na)]))
    if n_b is not None:
        rho_b = np.outer(*(2 * [_fock_vector(n_b, nb)]))
    else:
        rho_b = np.diag(thermal_populations(nbar_b, nb)).astype(complex)
    if source.kind == "fock":
        psi = _fock_vector(source.n, nc)
    else:
        psi = _coherent_vector(source.beta, nc)
    rho_c = np.outer(psi, psi.conj())
    return np.kron(np.kron(rho_a, rho_b), rho_c)


# -- observables ----------------------------------------------------------


def observable_operator(ops: ModeOperators, which: str) -> sp.csr_matrix:
    spec = _ALIASES.get(which, which)
    tokens = spec.replace("*", " ").split()
    if not tokens:
        raise ValueError(f"unknown observable {which!r}")
    out = ops.eye
    for tok in tokens:
        try:
            out = out @ ops.get(tok)
        except KeyError:
            raise ValueError(f"unknown observable {which!r}") from None
    return out.tocsr()


def expectation(rho: np.ndarray, which: str, tr: TruncationSpec, ops: ModeOperators | None = None) -> complex:
    """``Tr(O rho)`` for an observable tag such as ``"n_a"``, ``"adc"`` or ``"a bd"``."""
    ops = ops or ModeOperators.build(tr)
    op = observable_operator(ops, which)
    return complex((op @ rho).diagonal().sum())


def leakage(rho: np.ndarray, tr: TruncationSpec) -> tuple[float, float, float]:
    """Population of the highest retained Fock level of each mode."""
    pops = np.real(np.diagonal(rho)).reshape(tr.shape)
    return (float(pops.sum(axis=(1, 2))[-1]), float(pops.sum(axis=(0, 2))[-1]), float(pops.sum(axis=(0, 1))[-1]))


# -- evolution ------------------------------------------------------------

DEFAULT_OBSERVABLES = ("n_a", "n_b", "n_c", "aa", "aad", "bb", "bbd", "ab", "abd", "ac", "adc", "bc", "bdc", "cc")


@dataclass
class OracleTrajectory:
    times: np.ndarray
    values: dict  # tag -> complex array
    leakage: np.ndarray  # (T, 3)
    trace_drift: float
    min_eigenvalue: float
    final: np.ndarray
    states: list | None = None

    @property
    def n_a(self) -> np.ndarray:
        return self.values["n_a"].real

    @property
    def n_b(self) -> np.ndarray:
        return self.values["n_b"].real

    @property
    def max_leakage(self) -> float:
        return float(self.leakage.max())


def _hermitian(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + rho.conj().T)


def evolve_rho(
    gen: Liouvillian,
    rho0: np.ndarray,
    t_grid,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-12,
    observables=DEFAULT_OBSERVABLES,
    store_states: bool = False,
    method: str = "adaptive",
    step: float = 1e-3,
    use_superoperator: bool | None = None,
    positivity_every: int = 1,
    t0: float | None = None,
) -> OracleTrajectory:
    """Integrate the master equation and sample observables on ``t_grid``.

    The state is re-symmetrised to ``(rho + rho†)/2`` on every right-hand-side
    evaluation and on every sample. Raises :class:`TruncationError` if the
    smallest eigenvalue of a sampled state drops below ``-1e-4``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    d = gen.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (d, d):
        raise ValueError(f"initial state has shape {rho0.shape}, expected {(d, d)}")
    if use_superoperator is None:
        use_superoperator = d <= gen.superop_max_dim
    if use_superoperator:
        lv = gen.superoperator

        def rhs(t, y):
            r = y.reshape(d, d)
            return lv @ _hermitian(r).reshape(-1)
    else:
        def rhs(t, y):
            return gen.apply(_hermitian(y.reshape(d, d))).reshape(-1)

    ops = gen.ops
    operators = {tag: observable_operator(ops, tag) for tag in observables}
    values = {tag: np.empty(t_grid.size, complex) for tag in observables}
    leak = np.empty((t_grid.size, 3))
    states = [] if store_states else None
    state = {"trace": 0.0, "min_eig": np.inf, "last": None}
    trace0 = np.trace(rho0).real

    def on_sample(i, t, y):
        rho = _hermitian(y.reshape(d, d))
        for tag, op in operators.items():
            values[tag][i] = (op @ rho).diagonal().sum()
        leak[i] = leakage(rho, gen.trunc)
        state["trace"] = max(state["trace"], abs(np.trace(rho).real - trace0))
        if positivity_every and i % positivity_every == 0:
            w = np.linalg.eigvalsh(rho)[0]
            state["min_eig"] = min(state["min_eig"], float(w))
            if w < -1e-4:
                raise TruncationError(f"negative eigenvalue {w:.3g} at t={t:.6g}; increase the cutoffs")
        if store_states:
            states.append(rho.copy())
        state["last"] = rho

    start = float(t_grid[0]) if t0 is None else t0
    solve(rhs, rho0.reshape(-1), start, t_grid, rtol=rel_tol, atol=abs_tol, method=method, step=step,
          on_sample=on_sample)
    return OracleTrajectory(times=t_grid, values=values, leakage=leak, trace_drift=state["trace"],
                            min_eigenvalue=state["min_eig"], final=state["last"], states=states)


def relax(p: SimParams, tr: TruncationSpec, rho0: np.ndarray, t_relax: float, rel_tol: float = 1e-9,
          abs_tol: float = 1e-12) -> np.ndarray:
    """Evolve with the source decoupled (``gamma = 0``) to reach the pre-injection steady state."""
    gen = build_liouvillian(p.replace(gamma=0.0), tr)
    traj = evolve_rho(gen, rho0, [0.0, t_relax], rel_tol=rel_tol, abs_tol=abs_tol, observables=())
    return traj.final


def run_oracle(
    p: SimParams,
    source: SourceSpec,
    tr: TruncationSpec,
    t_grid,
    t_relax: float = 0.0,
    nbar_init: float | None = None,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-12,
    observables=DEFAULT_OBSERVABLES,
) -> OracleTrajectory:
    """Oracle counterpart of a scenario run.

    The cavity starts empty and the mirror thermal at ``nbar_init`` (default
    ``p.nbar``); with ``t_relax > 0`` the system is first relaxed with the
    source decoupled, then the source is switched on at ``t = 0``.
    """
    nbar0 = p.nbar if nbar_init is None else nbar_init
    rho0 = product_state(tr, source, nbar_b=nbar0)
    if t_relax > 0:
        rho0 = relax(p, tr, rho0, t_relax, rel_tol, abs_tol)
    gen = build_liouvillian(p, tr)
    return evolve_rho(gen, rho0, t_grid, rel_tol=rel_tol, abs_tol=abs_tol, observables=observables)
