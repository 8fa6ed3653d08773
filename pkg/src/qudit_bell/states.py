"""Two-qudit states and density operators.

Product basis ordering is row-major: |j>_A |k>_B sits at index ``j * d + k``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_ATOL = 1e-10
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QuditPairState:
    """Normalized pure state of two d-level systems.

    ``amplitudes`` has length d**2; ``amplitudes[j * d + k]`` is the
    coefficient of |j>_A |k>_B.
    """

    dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")
        if amps.size != self.dim**2:
            raise ValueError(
                f"expected {self.dim**2} amplitudes for d={self.dim}, got {amps.size}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_coefficients(cls, coeffs) -> "QuditPairState":
        """Normalize a d x d coefficient matrix ``c[j, k]`` into a state."""
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("coefficients must be a square d x d matrix")
        norm = np.linalg.norm(c)
        if norm == 0:
            raise ValueError("cannot normalize an all-zero coefficient matrix")
        return cls(c.shape[0], (c / norm).reshape(-1))

    @property
    def coefficients(self) -> np.ndarray:
        """Amplitudes as a d x d matrix ``c[j, k]``."""
        return self.amplitudes.reshape(self.dim, self.dim)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace operator on a D-dimensional space.

    Positivity is not enforced at construction because linear tomographic
    inversion legitimately produces non-positive estimates; use
    :meth:`is_physical` to check it.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density operator must be a square matrix")
        if not np.allclose(m, m.conj().T, rtol=0, atol=HERMITIAN_ATOL):
            raise ValueError("density operator is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"density operator trace is {tr!r}, expected 1")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def qudit_dim(self) -> int:
        """Local dimension d of a two-qudit operator (D = d**2)."""
        d = int(round(np.sqrt(self.dim)))
        if d * d != self.dim:
            raise ValueError(f"dimension {self.dim} is not a perfect square")
        return d

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_physical(self, atol: float = PSD_ATOL) -> bool:
        return bool(self.eigenvalues().min() >= -atol)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def to_json(self) -> list:
        """Nested ``[re, im]`` pairs, row by row."""
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]

    @classmethod
    def from_json(cls, data) -> "DensityOperator":
        arr = np.asarray(data, dtype=float)
        return cls(arr[..., 0] + 1j * arr[..., 1])


def make_gamma_state(d: int, gamma: float) -> QuditPairState:
    """Diagonal two-qudit state with the |1>|1> term weighted by ``gamma``.

    d=2: (|00> + gamma |11>) / sqrt(1 + gamma^2)
    d=3: (|00> + gamma |11> + |22>) / sqrt(2 + gamma^2)
    """
    if d not in (2, 3):
        raise ValueError(f"gamma states are defined for d in {{2, 3}}, got {d}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    diag = np.ones(d)
    diag[1] = gamma
    return QuditPairState.from_coefficients(np.diag(diag))


def maximally_entangled(d: int) -> QuditPairState:
    return QuditPairState.from_coefficients(np.eye(d))


def pure_density(state: QuditPairState) -> DensityOperator:
    psi = state.amplitudes
    return DensityOperator(np.outer(psi, psi.conj()))


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim, dtype=complex) / dim)


def apply_symmetric_noise(rho: DensityOperator, lam: float, d: int) -> DensityOperator:
    """White-noise mixture ``lam * rho + (1 - lam) / d**2 * identity``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"mixing parameter must lie in [0, 1], got {lam}")
    if rho.dim != d * d:
        raise ValueError(f"operator dimension {rho.dim} does not match d**2 = {d * d}")
    eye = np.eye(d * d, dtype=complex)
    return DensityOperator(lam * rho.matrix + (1.0 - lam) / (d * d) * eye)


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Square root of a PSD matrix, clamping slightly negative eigenvalues."""
    w, v = np.linalg.eigh(m)
    if w.min() < -PSD_ATOL:
        raise ValueError(f"matrix has eigenvalue {w.min():.3g} below -{PSD_ATOL}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: DensityOperator, target: DensityOperator) -> float:
    """Josza fidelity ``[Tr sqrt(sqrt(target) rho sqrt(target))]**2``.

    The product is formed on the support of ``target`` so that rank-deficient
    targets do not pick up sqrt(roundoff) contributions from its null space.
    """
    if rho.dim != target.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {target.dim}")
    w, v = np.linalg.eigh(target.matrix)
    if w.min() < -PSD_ATOL:
        raise ValueError(f"target has eigenvalue {w.min():.3g} below -{PSD_ATOL}")
    keep = w > 1e-12 * w.max()
    half = v[:, keep] * np.sqrt(w[keep])
    inner = half.conj().T @ rho.matrix @ half
    inner = 0.5 * (inner + inner.conj().T)
    ev = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(min(np.sum(np.sqrt(ev)) ** 2, 1.0))


def pure_fidelity(rho: DensityOperator, target: QuditPairState) -> float:
    """<psi|rho|psi>; equals :func:`fidelity` for a pure target."""
    psi = target.amplitudes
    if rho.dim != psi.size:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {psi.size}")
    return float(np.real(psi.conj() @ rho.matrix @ psi))
