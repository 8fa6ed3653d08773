"""Joint outcome probabilities and the CGLMP Bell parameter for d = 2, 3.

Measurement bases store outcome kets as the *rows* of a unitary: row ``m``
holds the coefficients u_j of |m> = sum_j u_j |j>.  Setting labels are
1-based (A1, A2, B1, B2) at the interface and 0-based in arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .states import DensityOperator

NORMALIZATION_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    unitary: np.ndarray
    params: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        u = np.array(self.unitary, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError("basis unitary must be square")
        if not np.allclose(u @ u.conj().T, np.eye(u.shape[0]), rtol=0, atol=1e-10):
            raise ValueError("basis matrix is not unitary")
        u.setflags(write=False)
        p = np.array(self.params, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "params", p)

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    def ket(self, m: int) -> np.ndarray:
        return self.unitary[m]

    @classmethod
    def computational(cls, d: int) -> "MeasurementBasis":
        return cls(np.eye(d, dtype=complex))


@dataclass(frozen=True, eq=False)
class SettingsEnsemble:
    """Alice's bases (a1, a2) and Bob's bases (b1, b2)."""

    a1: MeasurementBasis
    a2: MeasurementBasis
    b1: MeasurementBasis
    b2: MeasurementBasis

    def __post_init__(self):
        dims = {b.dim for b in (self.a1, self.a2, self.b1, self.b2)}
        if len(dims) != 1:
            raise ValueError(f"all four bases must share one dimension, got {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.a1.dim

    def alice(self, a: int) -> MeasurementBasis:
        return (self.a1, self.a2)[a - 1]

    def bob(self, b: int) -> MeasurementBasis:
        return (self.b1, self.b2)[b - 1]

    @classmethod
    def uniform(cls, basis: MeasurementBasis) -> "SettingsEnsemble":
        return cls(basis, basis, basis, basis)

    def to_json(self) -> dict:
        out = {}
        for name in ("a1", "a2", "b1", "b2"):
            basis = getattr(self, name)
            out[name] = {
                "params": basis.params.tolist(),
                "unitary": [[[z.real, z.imag] for z in row] for row in basis.unitary],
            }
        return out

    @classmethod
    def from_json(cls, data: dict) -> "SettingsEnsemble":
        bases = []
        for name in ("a1", "a2", "b1", "b2"):
            arr = np.asarray(data[name]["unitary"], dtype=float)
            bases.append(MeasurementBasis(arr[..., 0] + 1j * arr[..., 1], data[name]["params"]))
        return cls(*bases)


@dataclass(frozen=True, eq=False)
class JointProbabilityTable:
    """``probs[a, b, m, n] = P(A_{a+1} = m, B_{b+1} = n)``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        d = p.shape[-1]
        if p.shape != (2, 2, d, d):
            raise ValueError(f"table must have shape (2, 2, d, d), got {p.shape}")
        if p.min() < -1e-12 or p.max() > 1 + 1e-12:
            raise ValueError("probabilities must lie in [0, 1]")
        sums = p.sum(axis=(2, 3))
        if not np.allclose(sums, 1.0, rtol=0, atol=NORMALIZATION_ATOL):
            raise ValueError(f"per-setting probabilities do not sum to 1: {sums.tolist()}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def dim(self) -> int:
        return self.probs.shape[-1]

    def __call__(self, a: int, b: int, m: int, n: int) -> float:
        return float(self.probs[a - 1, b - 1, m, n])

    def to_json(self) -> list:
        return self.probs.tolist()


def product_kets(alice: MeasurementBasis, bob: MeasurementBasis) -> np.ndarray:
    """Rows are |m>|n> for all outcome pairs, row index ``m * d + n``."""
    return np.kron(alice.unitary, bob.unitary)


def joint_probabilities(rho: DensityOperator, settings: SettingsEnsemble) -> JointProbabilityTable:
    d = settings.dim
    if rho.dim != d * d:
        raise ValueError(f"operator dimension {rho.dim} does not match settings d={d}")
    probs = np.empty((2, 2, d, d))
    for a in (1, 2):
        for b in (1, 2):
            chi = product_kets(settings.alice(a), settings.bob(b))
            p = np.einsum("pi,ij,pj->p", chi.conj(), rho.matrix, chi).real
            probs[a - 1, b - 1] = p.reshape(d, d)
    return JointProbabilityTable(np.clip(probs, 0.0, 1.0))


def estimate_table(measure: Callable[[np.ndarray, np.ndarray], float],
                   settings: SettingsEnsemble) -> JointProbabilityTable:
    """Build a table from a signal ``measure(alice_ket, bob_ket)`` per outcome pair.

    Each setting pair is normalized by the sum of its d**2 outcomes, so the
    signal only has to be proportional to the outcome probability.  Exactly
    ``4 * d**2`` calls are made.
    """
    d = settings.dim
    signals = np.empty((2, 2, d, d))
    for a in (1, 2):
        for b in (1, 2):
            ua, ub = settings.alice(a).unitary, settings.bob(b).unitary
            for m in range(d):
                for n in range(d):
                    signals[a - 1, b - 1, m, n] = measure(ua[m], ub[n])
    totals = signals.sum(axis=(2, 3), keepdims=True)
    if np.any(totals <= 0):
        raise ValueError("a setting pair produced no signal")
    return JointProbabilityTable(signals / totals)


def coincidence_probability_shifted(table: JointProbabilityTable, a: int, b: int, k: int,
                                    bob_first: bool = False) -> float:
    """P(A_a = B_b + k), or P(B_b = A_a + k) when ``bob_first`` is set.

    Outcome arithmetic is modulo d.
    """
    d = table.dim
    p = table.probs[a - 1, b - 1]
    j = np.arange(d)
    if bob_first:
        return float(p[j, (j + k) % d].sum())
    return float(p[(j + k) % d, j].sum())


def cglmp_weights(d: int) -> np.ndarray:
    """Signed coefficients W with I_d = sum W[a, b, m, n] P[a, b, m, n].

    I_d = P(A1=B1) + P(B1=A2+1) + P(A2=B2) + P(B2=A1)
        - P(A1=B1-1) - P(B1=A2) - P(A2=B2-1) - P(B2=A1-1)
    """
    w = np.zeros((2, 2, d, d))
    j = np.arange(d)

    def add(a, b, k, sign, bob_first=False):
        if bob_first:
            w[a - 1, b - 1, j, (j + k) % d] += sign
        else:
            w[a - 1, b - 1, (j + k) % d, j] += sign

    add(1, 1, 0, +1)
    add(2, 1, 1, +1, bob_first=True)
    add(2, 2, 0, +1)
    add(1, 2, 0, +1, bob_first=True)
    add(1, 1, -1, -1)
    add(2, 1, 0, -1, bob_first=True)
    add(2, 2, -1, -1)
    add(1, 2, -1, -1, bob_first=True)
    return w


def bell_parameter_signed(table: JointProbabilityTable) -> float:
    c = coincidence_probability_shifted
    t = table
    return (c(t, 1, 1, 0) + c(t, 2, 1, 1, bob_first=True) + c(t, 2, 2, 0)
            + c(t, 1, 2, 0, bob_first=True)
            - c(t, 1, 1, -1) - c(t, 2, 1, 0, bob_first=True) - c(t, 2, 2, -1)
            - c(t, 1, 2, -1, bob_first=True))


def bell_parameter(table: JointProbabilityTable) -> float:
    """CGLMP parameter I_d; local hidden-variable models satisfy I_d <= 2."""
    if table.dim not in (2, 3):
        raise ValueError(f"the CGLMP expression is implemented for d in {{2, 3}}, got {table.dim}")
    return abs(bell_parameter_signed(table))
