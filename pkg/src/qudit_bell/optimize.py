"""Maximization of the CGLMP parameter over measurement settings.

Two families are searched:

* full U(d): each basis is ``exp(i sum_k theta_k G_k)`` with G_0 the identity
  and G_1..G_{d^2-1} the generalized Gell-Mann matrices (4 d^2 parameters);
* restricted multiport: kets are rows of ``F diag(exp(i phi))`` for Alice and
  ``conj(F) diag(exp(i phi))`` for Bob, F the symmetric d-port (DFT) matrix
  (4 d parameters).  Bob's port labels run in the opposite order, which is
  what makes the CGLMP correlations depend on outcome differences.

Each restart is an independent Nelder-Mead run with its own RNG stream
derived from ``(seed, restart index)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .bell import (MeasurementBasis, SettingsEnsemble, bell_parameter_signed, cglmp_weights,
                   joint_probabilities)
from .states import DensityOperator, QuditPairState, pure_density
from .tomography import gell_mann_basis

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizationConfig:
    restarts: int = 50
    tolerance: float = 1e-9
    max_evals: int = 60000
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def default(cls, d: int, **overrides) -> "OptimizationConfig":
        restarts = 20 if d == 2 else 50
        return cls(**{"restarts": restarts, **overrides})


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    best_value: float
    settings: SettingsEnsemble
    restarts_converged: int
    evals_used: int
    family: str = "full"
    values: tuple = field(default=())

    @property
    def degraded(self) -> bool:
        """True when no restart met the convergence tolerance."""
        return self.restarts_converged == 0

    @property
    def params(self) -> np.ndarray:
        s = self.settings
        return np.concatenate([s.a1.params, s.a2.params, s.b1.params, s.b2.params])

    def to_json(self) -> dict:
        return {
            "best_value": self.best_value,
            "family": self.family,
            "restarts_converged": self.restarts_converged,
            "evals_used": self.evals_used,
            "degraded": self.degraded,
            "restart_values": list(self.values),
            "settings": self.settings.to_json(),
        }


def restart_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _generators(d: int) -> np.ndarray:
    return gell_mann_basis(d).operators


def _exp_i_hermitian(h: np.ndarray) -> np.ndarray:
    """exp(i H) for a stack of Hermitian matrices via eigen-decomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def parameterize_unitary(params, d: int) -> MeasurementBasis:
    """Basis whose unitary is exp(i sum_k params[k] G_k)."""
    params = np.asarray(params, dtype=float)
    if params.shape != (d * d,):
        raise ValueError(f"expected {d * d} parameters for d={d}, got {params.shape}")
    h = np.tensordot(params, _generators(d), axes=1)
    return MeasurementBasis(_exp_i_hermitian(h), params)


def unitary_to_params(u: np.ndarray) -> np.ndarray:
    """Generator angles theta with exp(i sum theta_k G_k) == u."""
    from scipy.linalg import schur

    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    t, z = schur(u, output="complex")
    phases = np.angle(np.diag(t))
    h = (z * phases) @ z.conj().T
    g = _generators(d)
    norms = gell_mann_basis(d).norms()
    return np.real(np.einsum("kij,ji->k", g, h)) / norms


def dft_matrix(d: int) -> np.ndarray:
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)


def multiport_basis(phases, d: int, conjugate: bool = False) -> MeasurementBasis:
    """Symmetric d-port followed by per-mode phases: rows of F diag(e^{i phi})."""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (d,):
        raise ValueError(f"expected {d} phases, got {phases.shape}")
    f = dft_matrix(d)
    if conjugate:
        f = f.conj()
    return MeasurementBasis(f * np.exp(1j * phases), phases)


def restricted_settings(x, d: int) -> SettingsEnsemble:
    x = np.asarray(x, dtype=float).reshape(4, d)
    return SettingsEnsemble(
        multiport_basis(x[0], d), multiport_basis(x[1], d),
        multiport_basis(x[2], d, conjugate=True), multiport_basis(x[3], d, conjugate=True),
    )


def full_settings(x, d: int) -> SettingsEnsemble:
    x = np.asarray(x, dtype=float).reshape(4, d * d)
    return SettingsEnsemble(*(parameterize_unitary(p, d) for p in x))


def reference_settings(d: int) -> SettingsEnsemble:
    """Multiport settings with phases 2 pi j alpha / d, alpha = (0, 1/2) for
    Alice and (1/4, -1/4) for Bob; these give I_3 = 2.8729 on the maximally
    entangled qutrit."""
    j = np.arange(d)
    alpha = [0.0, 0.5, 0.25, -0.25]
    return restricted_settings(np.array([2 * np.pi * j * a / d for a in alpha]), d)


def _as_density(state) -> DensityOperator:
    if isinstance(state, QuditPairState):
        return pure_density(state)
    if isinstance(state, DensityOperator):
        return state
    raise TypeError(f"expected a QuditPairState or DensityOperator, got {type(state).__name__}")


class _BellObjective:
    """Negative signed I_d as a function of a flat parameter vector.

    Vectorized over the four bases and four setting pairs; algebraically the
    same computation as ``bell_parameter_signed(joint_probabilities(...))``.
    """

    def __init__(self, rho: DensityOperator, d: int, family: str):
        self.d = d
        self.family = family
        self.rho = rho.matrix
        self.weights = cglmp_weights(d).reshape(4, d * d)
        self.evals = 0
        if family == "full":
            self.gen = _generators(d).reshape(d * d, d * d)
        else:
            f = dft_matrix(d)
            self.ports = np.stack([f, f, f.conj(), f.conj()])

    def kets(self, x: np.ndarray) -> np.ndarray:
        d = self.d
        if self.family == "full":
            h = (x.reshape(4, d * d) @ self.gen).reshape(4, d, d)
            return _exp_i_hermitian(h)
        return self.ports * np.exp(1j * x.reshape(4, 1, d))

    def __call__(self, x: np.ndarray) -> float:
        self.evals += 1
        d, n = self.d, self.d * self.d
        u = self.kets(x)
        chi = (u[:2, None, :, None, :, None] * u[None, 2:, None, :, None, :]).reshape(4, n, n)
        p = np.einsum("pqj,pqj->pq", chi.conj() @ self.rho, chi).real
        return -float(np.einsum("pq,pq->", self.weights, p))


def _nelder_mead(objective, x0, config: OptimizationConfig, step: float | None = None):
    # Convergence is judged on the objective only: the global-phase and
    # per-outcome phase directions are flat and would otherwise stall xatol.
    options = {"maxfev": config.max_evals, "fatol": config.tolerance, "xatol": np.inf,
               "adaptive": True}
    if step is not None:
        simplex = np.vstack([x0, x0 + step * np.eye(len(x0))])
        options["initial_simplex"] = simplex
    return minimize(objective, x0, method="Nelder-Mead", options=options)


def _optimize(state, d: int, config: OptimizationConfig, family: str,
              starts=()) -> OptimizationResult:
    if d not in (2, 3):
        raise ValueError(f"d must be 2 or 3, got {d}")
    rho = _as_density(state)
    if rho.dim != d * d:
        raise ValueError(f"state dimension {rho.dim} does not match d={d}")
    objective = _BellObjective(rho, d, family)
    nparams = 4 * d * d if family == "full" else 4 * d
    build = full_settings if family == "full" else restricted_settings

    runs = []
    # warm starts first so that ties resolve towards them deterministically
    for x0 in starts:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (nparams,):
            raise ValueError(f"warm start has shape {x0.shape}, expected ({nparams},)")
        runs.append(_nelder_mead(objective, x0, config, step=0.05))
    for i in range(config.restarts):
        x0 = restart_rng(config.seed, i).uniform(0.0, 2 * np.pi, nparams)
        runs.append(_nelder_mead(objective, x0, config))

    values = [-r.fun for r in runs]
    top = max(values)
    best = next(i for i, v in enumerate(values) if v >= top - config.tolerance)
    converged = sum(1 for r in runs if r.status == 0)
    settings = build(runs[best].x, d)
    value = abs(bell_parameter_signed(joint_probabilities(rho, settings)))
    if converged == 0:
        log.warning("no %s-family restart converged within %d evaluations", family, config.max_evals)
    return OptimizationResult(value, settings, converged, objective.evals, family, tuple(values))


def optimize_bell(state, d: int, config: OptimizationConfig | None = None,
                  starts=()) -> OptimizationResult:
    """Maximize I_d over general U(d) measurement bases.

    ``starts`` are optional flat parameter vectors (4 d^2 entries) searched
    before the random restarts, e.g. the optimum at a neighbouring gamma.
    """
    config = config or OptimizationConfig.default(d)
    return _optimize(state, d, config, "full", starts)


def optimize_bell_restricted(state, d: int, config: OptimizationConfig | None = None,
                             starts=()) -> OptimizationResult:
    """Maximize I_d over multiport-beamsplitter settings (phases only)."""
    config = config or OptimizationConfig.default(d)
    return _optimize(state, d, config, "restricted", starts)


def restricted_to_full(result: OptimizationResult) -> np.ndarray:
    """Full-family parameters reproducing a restricted-family optimum."""
    s = result.settings
    return np.concatenate([unitary_to_params(b.unitary) for b in (s.a1, s.a2, s.b1, s.b2)])


PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


def correlation_matrix(rho: DensityOperator) -> np.ndarray:
    """T[u, v] = Tr(rho sigma_u (x) sigma_v) over the Pauli operators."""
    if rho.dim != 4:
        raise ValueError(f"two-qubit operator required, got dimension {rho.dim}")
    t = np.empty((3, 3))
    for u in range(3):
        for v in range(3):
            t[u, v] = np.trace(rho.matrix @ np.kron(PAULI[u], PAULI[v])).real
    return t


def horodecki_bound(rho: DensityOperator) -> float:
    """Maximal CHSH value 2 sqrt(t1 + t2) from the two largest eigenvalues of T^T T."""
    t = correlation_matrix(rho)
    ev = np.sort(np.linalg.eigvalsh(t.T @ t))[::-1]
    return float(2.0 * np.sqrt(max(ev[0] + ev[1], 0.0)))


