"""Two-qudit state tomography: Gell-Mann decomposition, product-state
measurement sets, count simulation, linear inversion and Poisson maximum
likelihood reconstruction with Monte Carlo fidelity uncertainties.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .states import DensityOperator, fidelity


@dataclass(frozen=True, eq=False)
class GellMannBasis:
    """Identity followed by the d**2 - 1 generalized Gell-Mann matrices.

    Ordering generalizes the standard qutrit labelling: for each column index
    k = 1..d-1, the symmetric and antisymmetric pairs (j, k) with j < k come
    first, then the diagonal generator with k + 1 non-zero entries.
    """

    d: int
    operators: np.ndarray

    def __len__(self):
        return len(self.operators)

    def __getitem__(self, k):
        return self.operators[k]

    def norms(self) -> np.ndarray:
        """Tr(lambda_k^2): d for the identity, 2 otherwise."""
        n = np.full(self.d**2, 2.0)
        n[0] = self.d
        return n


def gell_mann_basis(d: int) -> GellMannBasis:
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    ops = [np.eye(d, dtype=complex)]
    for k in range(1, d):
        for j in range(k):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            ops += [sym, anti]
        diag = np.zeros(d)
        diag[:k] = 1.0
        diag[k] = -k
        ops.append(np.diag(np.sqrt(2.0 / (k * (k + 1))) * diag).astype(complex))
    ops = np.array(ops)
    ops.setflags(write=False)
    return GellMannBasis(d, ops)


def _product_operators(d: int) -> np.ndarray:
    """lambda_k (x) lambda_l stacked with flat index ``k * d**2 + l``."""
    g = gell_mann_basis(d).operators
    return np.einsum("kab,lcd->klacbd", g, g).reshape(d**4, d * d, d * d)


def decompose(rho: DensityOperator, d: int) -> np.ndarray:
    """Real coefficients r with rho = (1/d**2) sum_kl r[k, l] lambda_k (x) lambda_l."""
    if rho.dim != d * d:
        raise ValueError(f"operator dimension {rho.dim} does not match d**2 = {d * d}")
    ops = _product_operators(d)
    norms = gell_mann_basis(d).norms()
    traces = np.einsum("pij,ji->p", ops, rho.matrix).reshape(d * d, d * d)
    if np.abs(traces.imag).max() > 1e-10:
        raise ValueError("operator is not Hermitian")
    return d * d * traces.real / np.outer(norms, norms)


def synthesize(r: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`decompose`; returns the raw matrix."""
    r = np.asarray(r, dtype=float).reshape(-1)
    return np.tensordot(r, _product_operators(d), axes=1) / (d * d)


@dataclass(frozen=True, eq=False)
class TomographySet:
    """Product kets |u>_A |v>_B over a d**2-element single-party family.

    ``kets[p]`` is the product ket for projector ``p = iu * d**2 + iv``.
    """

    d: int
    single: np.ndarray
    kets: np.ndarray

    def __len__(self):
        return len(self.kets)

    def projector(self, p: int) -> np.ndarray:
        return np.outer(self.kets[p], self.kets[p].conj())

    def design_matrix(self) -> np.ndarray:
        """A[p, kl] = Tr(Pi_p lambda_k (x) lambda_l) / d**2 (real)."""
        d = self.d
        ops = _product_operators(d)
        a = np.einsum("pi,qij,pj->pq", self.kets.conj(), ops, self.kets)
        return a.real / (d * d)

    def gram_rank(self, tol: float = 1e-8) -> int:
        vecs = np.einsum("pi,pj->pij", self.kets, self.kets.conj()).reshape(len(self), -1)
        gram = vecs.conj() @ vecs.T
        s = np.linalg.svd(gram, compute_uv=False)
        return int(np.sum(s > tol * s.max()))


def single_party_family(d: int) -> np.ndarray:
    """|j>, (|j>+|k>)/sqrt2 and (|j>+i|k>)/sqrt2 for j < k: d**2 kets."""
    eye = np.eye(d, dtype=complex)
    kets = [eye[j] for j in range(d)]
    for j in range(d):
        for k in range(j + 1, d):
            kets.append((eye[j] + eye[k]) / np.sqrt(2))
    for j in range(d):
        for k in range(j + 1, d):
            kets.append((eye[j] + 1j * eye[k]) / np.sqrt(2))
    return np.array(kets)


def tomography_set(d: int) -> TomographySet:
    if d not in (2, 3):
        raise ValueError(f"tomography sets are provided for d in {{2, 3}}, got {d}")
    single = single_party_family(d)
    kets = np.einsum("ui,vj->uvij", single, single).reshape(d**4, d * d)
    tset = TomographySet(d, single, kets)
    rank = tset.gram_rank()
    if rank != d**4:
        raise RuntimeError(f"measurement set is not tomographically complete (rank {rank})")
    return tset


@dataclass(frozen=True)
class CountRecord:
    projector_index: int
    expected: float
    observed: float

    def __post_init__(self):
        if self.observed < 0:
            raise ValueError("observed counts must be non-negative")


def simulate_counts(rho: DensityOperator, tset: TomographySet, shots: int, rng=None,
                    poisson: bool = True, background: float = 0.0) -> list[CountRecord]:
    """Coincidence counts for every projector of ``tset``.

    ``expected`` is ``shots * <chi|rho|chi>``.  A constant accidental rate
    ``background`` is added to the mean of the raw counts.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    probs = np.einsum("pi,ij,pj->p", tset.kets.conj(), rho.matrix, tset.kets).real
    expected = shots * np.clip(probs, 0.0, None)
    mean = expected + background
    if poisson:
        rng = np.random.default_rng(rng)
        observed = rng.poisson(mean)
    else:
        observed = np.round(mean)
    return [CountRecord(p, float(e), int(o)) for p, (e, o) in enumerate(zip(expected, observed))]


def _observed(records, n: int) -> np.ndarray:
    obs = np.full(n, np.nan)
    for rec in records:
        obs[rec.projector_index] = rec.observed
    if np.isnan(obs).any():
        raise ValueError("records do not cover every projector of the set")
    return obs


def linear_reconstruct(records, tset: TomographySet, d: int, background: float = 0.0) -> DensityOperator:
    """Least-squares inversion; Hermitian and unit trace but possibly not PSD."""
    a = tset.design_matrix()
    if np.linalg.matrix_rank(a) != d**4:
        raise ValueError("measurement system is rank deficient")
    counts = _observed(records, len(tset)) - background
    r, *_ = np.linalg.lstsq(a, counts, rcond=None)
    if abs(r[0]) < 1e-300:
        raise ValueError("reconstruction has zero trace")
    m = synthesize(r / r[0], d)
    return DensityOperator(0.5 * (m + m.conj().T))


def _unpack(x: np.ndarray, n: int) -> np.ndarray:
    t = np.zeros((n, n), dtype=complex)
    t[np.diag_indices(n)] = x[:n]
    rows, cols = np.tril_indices(n, -1)
    k = len(rows)
    t[rows, cols] = x[n:n + k] + 1j * x[n + k:]
    return t


def _pack(t: np.ndarray) -> np.ndarray:
    n = t.shape[0]
    rows, cols = np.tril_indices(n, -1)
    return np.concatenate([t.diagonal().real, t[rows, cols].real, t[rows, cols].imag])


def _lower_factor(m: np.ndarray) -> np.ndarray:
    """Lower-triangular T with T^dagger T = m for positive definite m."""
    flip = m[::-1, ::-1]
    chol = np.linalg.cholesky(flip)
    upper = chol[::-1, ::-1]
    return upper.conj().T


def project_psd(m: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """Nearest unit-trace matrix with eigenvalues >= ``floor`` (clip + renormalize)."""
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.clip(w, floor, None)
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real


@dataclass(frozen=True, eq=False)
class Reconstruction:
    rho: DensityOperator
    neg_log_likelihood: float
    converged: bool
    iterations: int
    factor: np.ndarray


def _nll_and_grad(x, kets, counts, background, n):
    """Poisson deviance/2 and its gradient in the packed factor parameters."""
    t = _unpack(x, n)
    y = kets @ t.T
    mu = np.einsum("pi,pi->p", y.conj(), y).real + background
    mu = np.maximum(mu, 1e-300)
    pos = counts > 0
    f = np.sum(mu - counts)
    f -= np.sum(counts[pos] * np.log(mu[pos] / counts[pos]))
    w = 1.0 - counts / mu
    # d(mu)/dRe T = 2 Re(conj(y) chi^T), d(mu)/dIm T = 2 Im(y chi^dagger)
    grad_t = 2.0 * (w[:, None] * y).T @ kets.conj()
    rows, cols = np.tril_indices(n, -1)
    g = np.concatenate([
        grad_t.diagonal().real,
        grad_t[rows, cols].real,
        grad_t[rows, cols].imag,
    ])
    return f, g


def mle_reconstruct(records, tset: TomographySet, d: int, tolerance: float = 1e-8,
                    background: float = 0.0, start: np.ndarray | None = None,
                    max_iter: int = 20000) -> Reconstruction:
    """Poisson maximum-likelihood estimate with rho = T^dagger T / Tr(T^dagger T).

    The expected count for projector p is mu_p = <chi_p|T^dagger T|chi_p> +
    background, so the overall intensity is fitted along with the state.
    ``start`` is a packed factor to warm-start from; by default the PSD
    projection of the linear reconstruction is used.
    """
    n = d * d
    counts = _observed(records, len(tset))
    kets = tset.kets
    if start is None:
        lin = linear_reconstruct(records, tset, d, background=background)
        rho0 = project_psd(lin.matrix, floor=1e-6)
        t0 = _lower_factor(rho0)
        scale = max(np.sum(counts - background), 1.0)
        x0 = _pack(t0 * np.sqrt(scale))
    else:
        x0 = np.asarray(start, dtype=float)
    # Deviance is O(number of projectors) near the optimum, so the relative
    # ftol below tracks an absolute log-likelihood change of ~tolerance.
    res = minimize(_nll_and_grad, x0, args=(kets, counts, background, n), jac=True,
                   method="L-BFGS-B",
                   options={"ftol": tolerance / max(len(counts), 1), "gtol": 1e-10,
                            "maxiter": max_iter, "maxcor": 30})
    t = _unpack(res.x, n)
    m = t.conj().T @ t
    m = m / np.trace(m).real
    m = 0.5 * (m + m.conj().T)
    return Reconstruction(DensityOperator(m), float(res.fun), bool(res.success), int(res.nit), res.x)


def mc_fidelity_uncertainty(records, tset: TomographySet, d: int, target: DensityOperator,
                            trials: int = 100, seed=None, background: float = 0.0,
                            tolerance: float = 1e-8) -> tuple[float, float]:
    """Mean fidelity and 2-sigma spread over Gaussian-perturbed count sets.

    Every observed count o is replaced by max(o + N(0, sqrt(o)), 0) and the
    state is re-estimated.
    """
    if trials < 100:
        raise ValueError("at least 100 trials are required")
    rng = np.random.default_rng(seed)
    base = mle_reconstruct(records, tset, d, tolerance=tolerance, background=background)
    counts = _observed(records, len(tset))
    fids = np.empty(trials)
    for i in range(trials):
        noisy = np.clip(counts + rng.normal(size=counts.size) * np.sqrt(counts), 0.0, None)
        perturbed = [CountRecord(p, 0.0, float(o)) for p, o in enumerate(noisy)]
        rec = mle_reconstruct(perturbed, tset, d, tolerance=tolerance, background=background,
                              start=base.factor)
        fids[i] = fidelity(rec.rho, target)
    return float(fids.mean()), float(2.0 * fids.std(ddof=1))


def bar_rows(rho: DensityOperator, d: int) -> list[tuple[str, str, float, float]]:
    """(row label, column label, re, im) for every matrix element."""
    labels = [f"{j}{k}" for j in range(d) for k in range(d)]
    return [(labels[r], labels[c], float(rho.matrix[r, c].real), float(rho.matrix[r, c].imag))
            for r in range(d * d) for c in range(d * d)]
