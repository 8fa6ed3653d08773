"""Frequency-bin qudits carved out of a continuous-wave SPDC biphoton.

Frequencies are in dimensionless grid units.  The joint spectral amplitude
factorizes in sum and difference coordinates, s = w_i + w_s and
t = w_i - w_s:

    Gamma(w_i, w_s) = A(s) * phi(t) / N,
    A(s)   = exp(-(s - pump_center)**2 / (4 pump_width**2)),
    phi(t) = sinc(t / pm_width),

so |A|**2 is a Gaussian of standard deviation ``pump_width``.  Integrals of
Gamma over bin rectangles are taken exactly in t (sine integral) and by
composite Gauss-Legendre quadrature in s, split at the rectangle corners, so
the narrow-pump limit needs no fine 2-D grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import sici

from .bell import JointProbabilityTable, SettingsEnsemble, estimate_table
from .states import QuditPairState, make_gamma_state

# Gaussian envelope is negligible (exp(-49)) beyond this many pump widths
_SUM_WINDOW = 14.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class GridSpec:
    """Uniform sampling grid in (sum, difference) frequency coordinates."""

    sum_half_range: float
    sum_step: float
    diff_half_range: float
    diff_step: float

    @classmethod
    def for_widths(cls, pump_width: float, pm_width: float, samples_per_width: int = 16,
                   diff_extent: float = 4.0, diff_samples: int = 400) -> "GridSpec":
        return cls(_SUM_WINDOW * pump_width, pump_width / samples_per_width,
                   diff_extent * pm_width, pm_width / diff_samples)

    def axes(self, pump_center: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Cell midpoints along s and t."""
        ns = max(int(round(2 * self.sum_half_range / self.sum_step)), 1)
        nt = max(int(round(2 * self.diff_half_range / self.diff_step)), 1)
        s = pump_center - self.sum_half_range + (np.arange(ns) + 0.5) * self.sum_step
        t = -self.diff_half_range + (np.arange(nt) + 0.5) * self.diff_step
        return s, t


@dataclass(frozen=True)
class SpectralModel:
    pump_center: float
    pump_width: float
    pm_width: float
    grid: GridSpec
    norm: float

    def envelope_sum(self, s):
        return np.exp(-((np.asarray(s) - self.pump_center) ** 2) / (4 * self.pump_width**2))

    def envelope_diff(self, t):
        return np.sinc(np.asarray(t) / self.pm_width)

    def amplitude(self, wi, ws):
        """Gamma(w_i, w_s)."""
        wi, ws = np.asarray(wi, dtype=float), np.asarray(ws, dtype=float)
        return self.envelope_sum(wi + ws) * self.envelope_diff(wi - ws) / self.norm

    def sampled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(s, t, Gamma) on the model grid; Gamma has shape (len(s), len(t))."""
        s, t = self.grid.axes(self.pump_center)
        vals = np.outer(self.envelope_sum(s), self.envelope_diff(t)) / self.norm
        return s, t, vals

    def grid_norm(self) -> float:
        """Midpoint-rule sum of |Gamma|^2 dw_i dw_s (Jacobian 1/2 in s, t)."""
        _, _, vals = self.sampled()
        return float(np.sum(np.abs(vals) ** 2) * self.grid.sum_step * self.grid.diff_step / 2)

    def diff_antiderivative(self, t):
        """Integral of phi from 0 to t."""
        w = self.pm_width
        si, _ = sici(np.pi * np.asarray(t) / w)
        return w / np.pi * si

    def rectangle_integral(self, wi_lo, wi_hi, ws_lo, ws_hi) -> float:
        """Integral of Gamma over [wi_lo, wi_hi] x [ws_lo, ws_hi]."""
        corners = sorted({wi_lo + ws_lo, wi_lo + ws_hi, wi_hi + ws_lo, wi_hi + ws_hi})
        window = _SUM_WINDOW * self.pump_width
        lo = max(corners[0], self.pump_center - window)
        hi = min(corners[-1], self.pump_center + window)
        if hi <= lo:
            return 0.0
        cuts = [lo] + [c for c in corners if lo < c < hi] + [hi]
        nodes, weights = [], []
        for a, b in zip(cuts[:-1], cuts[1:]):
            pieces = max(int(np.ceil((b - a) / (0.5 * self.pump_width))), 1)
            edges = np.linspace(a, b, pieces + 1)
            half = np.diff(edges) / 2
            mid = edges[:-1] + half
            nodes.append((mid[:, None] + half[:, None] * _GL_NODES).ravel())
            weights.append((half[:, None] * _GL_WEIGHTS).ravel())
        s = np.concatenate(nodes)
        w = np.concatenate(weights)
        t_lo = np.maximum(2 * wi_lo - s, s - 2 * ws_hi)
        t_hi = np.minimum(2 * wi_hi - s, s - 2 * ws_lo)
        inner = np.where(t_hi > t_lo,
                         self.diff_antiderivative(t_hi) - self.diff_antiderivative(t_lo), 0.0)
        return float(0.5 * np.sum(w * self.envelope_sum(s) * inner) / self.norm)


def build_jsa(pump_width: float, pm_width: float, grid: GridSpec | None = None,
              pump_center: float = 0.0) -> SpectralModel:
    """Normalized CW joint spectral amplitude.

    The normalization constant is fixed on ``grid`` so that the midpoint sum
    of |Gamma|^2 over the grid is one.
    """
    if pump_width <= 0 or pm_width <= 0:
        raise ValueError("pump and phase-matching widths must be positive")
    if pump_width > 0.1 * pm_width:
        raise ValueError("pump_width must be much smaller than pm_width (CW regime)")
    grid = grid or GridSpec.for_widths(pump_width, pm_width)
    if grid.sum_step > pump_width / 8:
        raise ValueError(
            f"grid too coarse: sum step {grid.sum_step:g} exceeds pump_width/8 = {pump_width / 8:g}"
        )
    model = SpectralModel(pump_center, pump_width, pm_width, grid, 1.0)
    s, t = grid.axes(pump_center)
    total = (np.sum(model.envelope_sum(s) ** 2) * grid.sum_step
             * np.sum(model.envelope_diff(t) ** 2) * grid.diff_step / 2)
    return SpectralModel(pump_center, pump_width, pm_width, grid, float(np.sqrt(total)))


@dataclass(frozen=True, eq=False)
class FrequencyBinLayout:
    """Top-hat bins; signal bin j mirrors idler bin j about pump_center / 2."""

    d: int
    centers: np.ndarray
    widths: np.ndarray
    pump_center: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        w = np.asarray(self.widths, dtype=float)
        if c.shape != (self.d,) or w.shape != (self.d,):
            raise ValueError(f"need {self.d} bin centers and widths")
        if np.any(w <= 0):
            raise ValueError("bin widths must be positive")
        for j in range(self.d):
            for k in range(j + 1, self.d):
                if abs(c[j] - c[k]) <= (w[j] + w[k]) / 2:
                    raise ValueError(f"bins {j} and {k} overlap")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)

    @classmethod
    def regular(cls, d: int, first: float = 1.0, spacing: float = 1.5, width: float = 1.0,
                pump_center: float = 0.0) -> "FrequencyBinLayout":
        return cls(d, pump_center / 2 + first + spacing * np.arange(d), np.full(d, width),
                   pump_center)

    def party_centers(self, party: str) -> np.ndarray:
        if party == "idler":
            return self.centers
        if party == "signal":
            return self.pump_center - self.centers
        raise ValueError(f"unknown party {party!r}")

    def intervals(self, party: str) -> np.ndarray:
        c = self.party_centers(party)
        return np.stack([c - self.widths / 2, c + self.widths / 2], axis=1)

    def basis_function(self, party: str, j: int, w) -> np.ndarray:
        """f_j(w): 1/sqrt(width) inside bin j, zero outside."""
        c = self.party_centers(party)[j]
        w = np.asarray(w, dtype=float)
        return np.where(np.abs(w - c) < self.widths[j] / 2, 1.0 / np.sqrt(self.widths[j]), 0.0)

    def overlap_matrix(self, party: str) -> np.ndarray:
        """Integral of f_j f_k, from interval intersections."""
        iv = self.intervals(party)
        out = np.empty((self.d, self.d))
        for j in range(self.d):
            for k in range(self.d):
                inter = max(0.0, min(iv[j, 1], iv[k, 1]) - max(iv[j, 0], iv[k, 0]))
                out[j, k] = inter / np.sqrt(self.widths[j] * self.widths[k])
        return out


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """Per-bin complex SLM transmission u_j = |u_j| exp(i phi_j)."""

    party: str
    u: np.ndarray

    def __post_init__(self):
        if self.party not in ("idler", "signal"):
            raise ValueError(f"party must be 'idler' or 'signal', got {self.party!r}")
        u = np.array(self.u, dtype=complex)
        if np.any(np.abs(u) > 1 + 1e-12):
            raise ValueError("SLM transmission amplitudes cannot exceed 1")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @classmethod
    def unit(cls, party: str, d: int) -> "TransferFunction":
        return cls(party, np.ones(d))

    @classmethod
    def polar(cls, party: str, amplitudes, phases) -> "TransferFunction":
        return cls(party, np.asarray(amplitudes) * np.exp(1j * np.asarray(phases)))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.abs(self.u)

    @property
    def phases(self) -> np.ndarray:
        return np.mod(np.angle(self.u), 2 * np.pi)

    def projecting_onto(self, ket) -> "TransferFunction":
        """This transmission followed by a projection onto ``ket``.

        The detected amplitude is sum_j u_j c_j, so projecting onto a ket
        with coefficients x_j needs u_j -> u_j * conj(x_j).
        """
        return TransferFunction(self.party, self.u * np.conj(np.asarray(ket)))

    def evaluate(self, layout: FrequencyBinLayout, w) -> np.ndarray:
        """M(w) = sum_j u_j f_j(w)."""
        return sum(self.u[j] * layout.basis_function(self.party, j, w) for j in range(layout.d))


def bin_overlaps(model: SpectralModel, layout: FrequencyBinLayout) -> np.ndarray:
    """B[j, k] = integral of f_j^i(w_i) f_k^s(w_s) Gamma(w_i, w_s)."""
    iv_i = layout.intervals("idler")
    iv_s = layout.intervals("signal")
    b = np.empty((layout.d, layout.d), dtype=complex)
    for j in range(layout.d):
        for k in range(layout.d):
            rect = model.rectangle_integral(iv_i[j, 0], iv_i[j, 1], iv_s[k, 0], iv_s[k, 1])
            b[j, k] = rect / np.sqrt(layout.widths[j] * layout.widths[k])
    return b


@dataclass(frozen=True, eq=False)
class Discretization:
    raw: np.ndarray
    state: QuditPairState


def discretize(model: SpectralModel, layout: FrequencyBinLayout, mi: TransferFunction,
               ms: TransferFunction, overlaps: np.ndarray | None = None) -> Discretization:
    """Bin coefficients c_jk = u_j^i u_k^s B_jk and the normalized qudit state."""
    b = bin_overlaps(model, layout) if overlaps is None else overlaps
    raw = mi.u[:, None] * b * ms.u[None, :]
    if not np.any(np.abs(raw) > 0):
        raise ValueError("discretized state vanishes (all transmissions blocked?)")
    return Discretization(raw, QuditPairState.from_coefficients(raw))


def procrustean_equalize(raw_c) -> tuple[TransferFunction, TransferFunction]:
    """Attenuate strong bins so all diagonal amplitudes match the weakest.

    Each party gets |u_j| = sqrt(min|c| / |c_j|); the joint term c_j sees the
    product of both.  A non-trivial phase of c_j is undone on the idler side.
    """
    c = np.asarray(raw_c, dtype=complex)
    mags = np.abs(c)
    if np.any(mags == 0):
        raise ValueError("cannot equalize: a bin has zero amplitude")
    amp = np.sqrt(mags.min() / mags)
    return (TransferFunction.polar("idler", amp, -np.angle(c)),
            TransferFunction.polar("signal", amp, np.zeros_like(amp)))


def set_gamma(pair: tuple[TransferFunction, TransferFunction], gamma: float,
              d: int) -> tuple[TransferFunction, TransferFunction]:
    """Scale the |1>|1> term by gamma, attenuating bin 1 by sqrt(gamma) per party."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    out = []
    for tf in pair:
        if len(tf.u) != d:
            raise ValueError(f"transfer function has {len(tf.u)} bins, expected {d}")
        u = tf.u.copy()
        u[1] *= np.sqrt(gamma)
        out.append(TransferFunction(tf.party, u))
    return tuple(out)


def sfg_signal(model: SpectralModel, layout: FrequencyBinLayout, mi: TransferFunction,
               ms: TransferFunction, overlaps: np.ndarray | None = None) -> float:
    """|integral of Gamma M^i M^s|^2 (unnormalized SFG coincidence rate)."""
    b = bin_overlaps(model, layout) if overlaps is None else overlaps
    return float(np.abs(mi.u @ b @ ms.u) ** 2)


class SpectralExperiment:
    """Model + layout with the bin overlaps computed once.

    ``projector_calls`` counts SFG evaluations for bookkeeping.
    """

    def __init__(self, model: SpectralModel, layout: FrequencyBinLayout):
        self.model = model
        self.layout = layout
        self.d = layout.d
        self.overlaps = bin_overlaps(model, layout)
        self.projector_calls = 0

    def raw_state(self) -> Discretization:
        d = self.d
        return discretize(self.model, self.layout, TransferFunction.unit("idler", d),
                          TransferFunction.unit("signal", d), self.overlaps)

    def prepare(self, gamma: float) -> tuple[TransferFunction, TransferFunction]:
        """Transfer functions producing the gamma state (equalize, then tune)."""
        equalized = procrustean_equalize(np.diag(self.raw_state().raw))
        return set_gamma(equalized, gamma, self.d)

    def state(self, gamma: float) -> Discretization:
        mi, ms = self.prepare(gamma)
        return discretize(self.model, self.layout, mi, ms, self.overlaps)

    def signal(self, mi: TransferFunction, ms: TransferFunction, alice_ket, bob_ket) -> float:
        self.projector_calls += 1
        return sfg_signal(self.model, self.layout, mi.projecting_onto(alice_ket),
                          ms.projecting_onto(bob_ket), self.overlaps)

    def bell_table(self, gamma: float, settings: SettingsEnsemble) -> JointProbabilityTable:
        mi, ms = self.prepare(gamma)
        return estimate_table(lambda a, b: self.signal(mi, ms, a, b), settings)

    def target(self, gamma: float) -> QuditPairState:
        return make_gamma_state(self.d, gamma)
