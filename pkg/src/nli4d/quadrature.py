"""Coupling integrals of the interference model over the WDM island geometry.

Every spectral coupling term is an integral of products of the link function
mu over small frequency islands (channel-band intersections).  Two structural
facts keep this tractable:

* mu depends on (f1, f2, f) only through the mismatch rate
  u = 4 pi^2 beta2 (f - f1)(f2 - f1), so every line integral along which u is
  affine reduces to a lookup in a 1D cumulative table of mu(u) or |mu(u)|^2.
* the exchange-paired second term of the X3/M3 families has exactly the same
  mismatch u as its first term, so it equals the first term's value and needs
  no separate evaluation.

The remaining genuinely oscillatory integrals use composite Gauss-Legendre
panels whose segment counts track the local phase rate, concentrated where
the mismatch is small (the resonance lines f1 = f and f2 = f1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import link as lk
from .link import LinkSpec, WdmSpec

__all__ = [
    "QuadratureControl",
    "ConvergenceError",
    "ChiSet",
    "ChiEngine",
    "chi_sci",
    "chi_xci",
    "chi_x4",
    "chi_mci",
    "gn_m0",
    "region_map",
    "classify_point",
    "m1_indices",
    "m2_indices",
    "m3_indices",
    "m0_triples",
    "SCI_TERMS",
    "XLIKE_TERMS",
]

SCI_TERMS = tuple(f"chi{i}" for i in range(1, 12))
XLIKE_TERMS = ("chi1", "chi2", "chi3")

_GL_ORDER = 12


class ConvergenceError(RuntimeError):
    """A term cannot reach the requested tolerance within the budget."""

    def __init__(self, msg, needed=None, budget=None):
        super().__init__(msg)
        self.needed = needed
        self.budget = budget


@dataclass(frozen=True)
class QuadratureControl:
    rel_tol: float = 1e-3
    max_evals: float = 2e7  # per coupling term
    seed: int | None = None
    f_nodes: int = 17
    resolution: float = 1.0
    nodes_per_cycle: float = 4.0


@dataclass
class ChiSet:
    """Named coupling-term values with per-term error estimates."""

    values: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def value(self, name):
        return self.values[name]

    def error(self, name):
        return self.errors[name]


@dataclass(frozen=True)
class Band:
    lo: float
    hi: float
    center: float

    @property
    def width(self):
        return self.hi - self.lo


def _band(center: float, width: float) -> Band:
    return Band(center - width / 2.0, center + width / 2.0, center)


# ---------------------------------------------------------------------------
# Engine


class ChiEngine:
    """Evaluates bare coupling integrals (pulse amplitude factors pulled out).

    All returned integrals omit the constant rectangular pulse factors; the
    caller multiplies by Ts^6 to recover the tabulated values.  Only the
    rectangular pulse is supported here; a root-raised-cosine request must be
    run at (near-)zero rolloff, which is spectrally identical.
    """

    def __init__(self, link: LinkSpec, wdm: WdmSpec, ctrl: QuadratureControl,
                 resolution: float | None = None):
        if wdm.pulse != "rect":
            raise ValueError(
                "model quadrature supports the rectangular spectrum only; "
                "rolloffs near zero are spectrally identical to rect"
            )
        self.link = link
        self.wdm = wdm
        self.ctrl = ctrl
        self.res = float(resolution if resolution is not None else ctrl.resolution)
        self.k = 4.0 * math.pi**2 * link.beta2  # rad/m per Hz^2, signed
        self.kabs = abs(self.k)
        self.LN = link.span_length * link.n_spans
        self.W = wdm.symbol_rate_hz
        self.A = _band(0.0, self.W)
        self.ts6 = (1.0 / wdm.symbol_rate_hz) ** 6
        self._gl_x, self._gl_w = leggauss(_GL_ORDER)
        self._gl_x = (self._gl_x + 1.0) / 2.0
        self._gl_w = self._gl_w / 2.0
        self._panel_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._musq_tab = None  # (du, boundaries T array)
        self._mucx_tab = None
        self._term_evals = 0
        self._term_name = ""

    def band(self, center: float) -> Band:
        return _band(center, self.W)

    # -- budget ------------------------------------------------------------

    def _begin(self, name: str):
        self._term_name = name
        self._term_evals = 0

    def _count(self, n: float):
        self._term_evals += n
        if self._term_evals > self.ctrl.max_evals:
            raise ConvergenceError(
                f"term {self._term_name!r} exceeds the evaluation budget "
                f"({self._term_evals:.2e} > {self.ctrl.max_evals:.2e}); "
                "raise max_evals or relax the tolerance",
                needed=self._term_evals,
                budget=self.ctrl.max_evals,
            )

    # -- nodes ---------------------------------------------------------------

    def _panels01(self, nseg: int):
        got = self._panel_cache.get(nseg)
        if got is None:
            offs = (np.arange(nseg)[:, None] + self._gl_x[None, :]) / nseg
            wt = np.broadcast_to(self._gl_w[None, :] / nseg, offs.shape)
            got = (offs.ravel(), wt.ravel().copy())
            self._panel_cache[nseg] = got
        return got

    def _nseg(self, phase: float, lo_seg: int = 8) -> int:
        cycles = abs(phase) / (2.0 * math.pi)
        need = cycles * self.ctrl.nodes_per_cycle * self.res / _GL_ORDER
        return int(np.clip(math.ceil(need), lo_seg * max(self.res, 0.25), 60000))

    def _rate(self, extent: float) -> float:
        """Phase rate bound [rad/Hz] for one mu factor over a region extent."""
        return self.kabs * self.LN * extent

    def _outer_nodes(self, lo: float, hi: float, rate: float, lo_seg: int = 16):
        nseg = self._nseg(rate * (hi - lo), lo_seg)
        t, w = self._panels01(nseg)
        return lo + t * (hi - lo), w * (hi - lo)

    # -- cumulative mu tables ----------------------------------------------

    def _cells_per_period(self) -> float:
        return 16.0 * max(self.res, 0.25)

    def _build_table(self, umax: float, func):
        period = 2.0 * math.pi / self.LN  # finest oscillation of mu(u)
        du = period / self._cells_per_period()
        n = int(umax / du) + 2
        if n > 2e7:
            raise ConvergenceError(
                f"mu table would need {n:.2e} cells", needed=n, budget=2e7
            )
        bounds = np.arange(n + 1) * du
        g1 = bounds[:-1] + du * 0.5 * (1.0 - math.sqrt(3.0 / 5.0))
        g2 = bounds[:-1] + du * 0.5
        g3 = bounds[:-1] + du * 0.5 * (1.0 + math.sqrt(3.0 / 5.0))
        cells = (du / 18.0) * (
            5.0 * func(g1, self.link) + 8.0 * func(g2, self.link) + 5.0 * func(g3, self.link)
        )
        cum = np.concatenate((np.zeros(1, dtype=cells.dtype), np.cumsum(cells)))
        deriv = func(bounds, self.link)
        return du, bounds, cum, deriv

    @staticmethod
    def _hermite_T(u_abs, du, cum, deriv):
        """Cubic Hermite read of the cumulative table at |u| values."""
        n = cum.size - 1
        idx = np.clip((u_abs / du).astype(np.int64), 0, n - 1)
        t = u_abs / du - idx
        p0, p1 = cum[idx], cum[idx + 1]
        m0, m1 = du * deriv[idx], du * deriv[idx + 1]
        t2 = t * t
        t3 = t2 * t
        return (
            p0 * (2 * t3 - 3 * t2 + 1)
            + m0 * (t3 - 2 * t2 + t)
            + p1 * (-2 * t3 + 3 * t2)
            + m1 * (t3 - t2)
        )

    def _musq_T(self, umax: float):
        if self._musq_tab is None or self._musq_tab[1][-1] < umax:
            self._musq_tab = self._build_table(umax * 1.25, lk.mu_squared_of_u)
        return self._musq_tab

    def _mucx_T(self, umax: float):
        if self._mucx_tab is None or self._mucx_tab[1][-1] < umax:
            self._mucx_tab = self._build_table(umax * 1.25, lk.mu_of_u)
        return self._mucx_tab

    _GL5_X = (np.polynomial.legendre.leggauss(5)[0] + 1.0) / 2.0
    _GL5_W = np.polynomial.legendre.leggauss(5)[1] / 2.0

    def _direct_small(self, func, ua, ub, width, idx):
        """5-point Gauss of func(u) on windows too small for table interp."""
        a = ua[idx][:, None]
        b = ub[idx][:, None]
        nodes = a + self._GL5_X[None, :] * (b - a)
        self._count(nodes.size)
        return (func(nodes, self.link) @ self._GL5_W) * width[idx]

    def _line_musq(self, c, z0, lo, hi):
        """integral over [lo, hi] of |mu(c (x - z0))|^2, elementwise."""
        c = np.atleast_1d(np.asarray(c, dtype=float))
        lo = np.broadcast_to(np.asarray(lo, dtype=float), c.shape)
        hi = np.broadcast_to(np.asarray(hi, dtype=float), c.shape)
        z0 = np.broadcast_to(np.asarray(z0, dtype=float), c.shape)
        width = np.maximum(hi - lo, 0.0)
        ua = c * (lo - z0)
        ub = c * (hi - z0)
        umax = float(max(np.max(np.abs(ua), initial=0.0), np.max(np.abs(ub), initial=0.0)))
        du, bounds, cum, deriv = self._musq_T(max(umax, 1e-12))
        self._count(ua.size / 4.0)

        def T(u):
            return np.sign(u) * self._hermite_T(np.abs(u), du, cum, deriv)

        c_safe = np.where(np.abs(c) > 0, c, 1.0)
        out = (T(ub) - T(ua)) / c_safe
        small = np.abs(ub - ua) < 2.0 * du
        idx = np.flatnonzero(small)
        if idx.size:
            out = np.array(out, copy=True)
            out.flat[idx] = self._direct_small(
                lk.mu_squared_of_u, ua.ravel(), ub.ravel(), width.ravel(), idx
            )
        return out

    def _line_mu(self, c, z0, lo, hi, conj=False):
        """integral over [lo, hi] of mu(c (x - z0)) (optionally conjugated)."""
        c = np.atleast_1d(np.asarray(c, dtype=float))
        lo = np.broadcast_to(np.asarray(lo, dtype=float), c.shape)
        hi = np.broadcast_to(np.asarray(hi, dtype=float), c.shape)
        z0 = np.broadcast_to(np.asarray(z0, dtype=float), c.shape)
        width = np.maximum(hi - lo, 0.0)
        ua = c * (lo - z0)
        ub = c * (hi - z0)
        umax = float(max(np.max(np.abs(ua), initial=0.0), np.max(np.abs(ub), initial=0.0)))
        du, bounds, cum, deriv = self._mucx_T(max(umax, 1e-12))
        self._count(ua.size / 4.0)

        def T(u):
            mag = self._hermite_T(np.abs(u), du, cum, deriv)
            return np.where(u >= 0, mag, -np.conj(mag))

        c_safe = np.where(np.abs(c) > 0, c, 1.0)
        out = (T(ub) - T(ua)) / c_safe
        small = np.abs(ub - ua) < 2.0 * du
        idx = np.flatnonzero(small)
        if idx.size:
            out = np.array(out, copy=True)
            out.flat[idx] = self._direct_small(
                lk.mu_of_u, ua.ravel(), ub.ravel(), width.ravel(), idx
            )
        return np.conj(out) if conj else out

    # -- generic island integrals -------------------------------------------

    def _outer_window(self, b1: Band, b2: Band, b3: Band, phi: float):
        lo = max(b1.lo, b2.lo + phi - b3.hi)
        hi = min(b1.hi, b2.hi + phi - b3.lo)
        return lo, hi

    def _extents(self, lo1, hi1, b2: Band, phi):
        ext12 = max(abs(b2.hi - lo1), abs(b2.lo - hi1))
        extp = max(abs(phi - lo1), abs(phi - hi1))
        return ext12, extp

    def chi1_island(self, b1: Band, b2: Band, b3: Band, phi: float, name="chi1"):
        """|mu|^2 island integral: f1 in b1, f2 in b2, phi - f1 + f2 in b3."""
        self._begin(name)
        lo1, hi1 = self._outer_window(b1, b2, b3, phi)
        if hi1 <= lo1:
            return 0.0
        ext12, extp = self._extents(lo1, hi1, b2, phi)
        f1, w1 = self._outer_nodes(lo1, hi1, self._rate(ext12 + extp), lo_seg=24)
        lo2 = np.maximum(b2.lo, b3.lo - phi + f1)
        hi2 = np.minimum(b2.hi, b3.hi - phi + f1)
        vals = self._line_musq(self.k * (phi - f1), f1, lo2, hi2)
        return float(w1 @ vals)

    def chi2_refl(self, b1: Band, b2: Band, phi: float, name="chi2"):
        """Reflection-paired cross term: mu(f1,f2,phi) mu*(f1, refl(f3), phi)."""
        self._begin(name)
        lo1, hi1 = self._outer_window(b1, b2, b2, phi)
        if hi1 <= lo1:
            return 0.0
        ext12, extp = self._extents(lo1, hi1, b2, phi)
        f1, w1 = self._outer_nodes(lo1, hi1, 2 * self._rate(ext12 + extp), lo_seg=16)
        lo2 = np.maximum(b2.lo, b2.lo - phi + f1)
        hi2 = np.minimum(b2.hi, b2.hi - phi + f1)
        width = np.maximum(hi2 - lo2, 0.0)
        nseg = self._nseg(2 * self._rate(extp) * float(width.max(initial=0.0)))
        t, wt = self._panels01(nseg)
        self._count(f1.size * t.size * 2)
        f2 = lo2[:, None] + t[None, :] * width[:, None]
        f1c = f1[:, None]
        m1 = lk.mu(f1c, f2, phi, self.link)
        m2 = lk.mu(f1c, f1c - f2 - phi + 2.0 * b2.center, phi, self.link)
        inner = (m1 * np.conj(m2)) @ wt * width
        return complex(w1 @ inner)

    def chi3_sq(self, b_out: Band, b_in: Band, phi: float, name="chi3"):
        """f1-resolved squared line integral: int |int mu df2|^2 df1."""
        self._begin(name)
        lo1 = max(b_out.lo, b_in.lo + phi - b_in.hi)
        hi1 = min(b_out.hi, b_in.hi + phi - b_in.lo)
        if hi1 <= lo1:
            return 0.0
        ext12, extp = self._extents(lo1, hi1, b_in, phi)
        f1, w1 = self._outer_nodes(lo1, hi1, self._rate(ext12 + extp), lo_seg=24)
        lo2 = np.maximum(b_in.lo, b_in.lo - phi + f1)
        hi2 = np.minimum(b_in.hi, b_in.hi - phi + f1)
        g = self._line_mu(self.k * (phi - f1), f1, lo2, hi2)
        return float(w1 @ np.abs(g) ** 2)

    def chi3_mid(self, b_mid: Band, b_a: Band, phi: float, name="chi3"):
        """f2-resolved squared line integral: int |int mu df1|^2 df2."""
        self._begin(name)
        lo2 = max(b_mid.lo, 2 * b_a.lo - phi)
        hi2 = min(b_mid.hi, 2 * b_a.hi - phi)
        if hi2 <= lo2:
            return 0.0
        ext12 = max(abs(hi2 - b_a.lo), abs(b_a.hi - lo2))
        extp = max(abs(phi - b_a.lo), abs(phi - b_a.hi))
        rate_in = self._rate(ext12 + extp)
        f2, w2 = self._outer_nodes(lo2, hi2, rate_in, lo_seg=16)
        lo1 = np.maximum(b_a.lo, phi + f2 - b_a.hi)
        hi1 = np.minimum(b_a.hi, phi + f2 - b_a.lo)
        width = np.maximum(hi1 - lo1, 0.0)
        nseg = self._nseg(rate_in * float(width.max(initial=0.0)))
        t, wt = self._panels01(nseg)
        self._count(f2.size * t.size)
        f1 = lo1[:, None] + t[None, :] * width[:, None]
        h = (lk.mu(f1, f2[:, None], phi, self.link) @ wt) * width
        return float(w2 @ np.abs(h) ** 2)

    # -- self-channel specials ------------------------------------------------

    def _a_part(self, phi: float):
        """int over the band of mu(f1, -phi, phi) df1 (mismatch quadratic in f1)."""
        A = self.A
        rate = self._rate(2 * (abs(phi) + A.hi))
        f1, w1 = self._outer_nodes(A.lo, A.hi, rate, lo_seg=24)
        self._count(f1.size)
        return complex(w1 @ lk.mu(f1, -phi, phi, self.link))

    def chi3_sci(self, phi: float):
        self._begin("chi3")
        if abs(phi) > self.A.hi:
            return 0.0
        return abs(self._a_part(phi)) ** 2

    def chi4(self, phi: float):
        self._begin("chi4")
        A = self.A
        lo = max(A.lo, phi - A.hi)
        hi = min(A.hi, phi - A.lo)
        if hi <= lo:
            return 0.0
        rate = 2 * self._rate(1.5 * self.W + 2 * abs(phi))
        w, ww = self._outer_nodes(lo, hi, rate, lo_seg=16)
        m4 = self._line_mu(
            self.k * w, phi - w, np.maximum(A.lo, A.lo - w), np.minimum(A.hi, A.hi - w)
        )
        k4 = self._line_mu(
            self.k * (phi - w),
            w,
            np.maximum(A.lo, A.lo - phi + w),
            np.minimum(A.hi, A.hi - phi + w),
            conj=True,
        )
        return complex(ww @ (m4 * k4))

    def chi5(self, phi: float):
        self._begin("chi5")
        A = self.A
        lo = max(A.lo, A.lo - phi)
        hi = min(A.hi, A.hi - phi)
        if hi <= lo:
            return 0.0
        rate = 2 * self._rate(1.5 * self.W + 2 * abs(phi))
        v, wv = self._outer_nodes(lo, hi, rate, lo_seg=16)
        m5 = self._line_mu(
            -self.k * v, phi, np.maximum(A.lo, A.lo - v), np.minimum(A.hi, A.hi - v)
        )
        lo2 = np.maximum(A.lo, phi + v - A.hi)
        hi2 = np.minimum(A.hi, phi + v - A.lo)
        width = np.maximum(hi2 - lo2, 0.0)
        nseg = self._nseg(self._rate(1.5 * self.W + abs(phi)) * float(width.max(initial=0.0)))
        t, wt = self._panels01(nseg)
        self._count(v.size * t.size)
        f2p = lo2[:, None] + t[None, :] * width[:, None]
        k5 = (np.conj(lk.mu(f2p, v[:, None], phi, self.link)) @ wt) * width
        return complex(wv @ (m5 * k5))

    def chi6(self, phi: float):
        self._begin("chi6")
        A = self.A
        lo = max(A.lo, A.lo - phi)
        hi = min(A.hi, A.hi - phi)
        if hi <= lo:
            return 0.0
        rate_in = self._rate(3.0 * self.W + abs(phi))
        f2, w2 = self._outer_nodes(lo, hi, rate_in, lo_seg=16)
        # J: f1 window, quadratic mismatch -> numeric
        lo1 = np.maximum(A.lo, phi + f2 - A.hi)
        hi1 = np.minimum(A.hi, phi + f2 - A.lo)
        width1 = np.maximum(hi1 - lo1, 0.0)
        nseg = self._nseg(rate_in * float(width1.max(initial=0.0)))
        t, wt = self._panels01(nseg)
        self._count(f2.size * t.size * 2)
        f1 = lo1[:, None] + t[None, :] * width1[:, None]
        j = (lk.mu(f1, f2[:, None], phi, self.link) @ wt) * width1
        # K6: f2' window, quadratic mismatch -> numeric
        lo6 = np.maximum(A.lo, A.lo - f2)
        hi6 = np.minimum(A.hi, A.hi - f2)
        width6 = np.maximum(hi6 - lo6, 0.0)
        f2p = lo6[:, None] + t[None, :] * width6[:, None]
        k6 = (np.conj(lk.mu(f2p, -phi - f2[:, None], phi, self.link)) @ wt) * width6
        return complex(w2 @ (j * k6))

    def chi7(self, phi: float):
        self._begin("chi7")
        A = self.A
        if abs(phi) > A.hi:
            return 0.0
        a_part = self._a_part(phi)
        lo = max(A.lo - phi, -self.W)
        hi = min(A.hi - phi, self.W)
        if hi <= lo:
            return 0.0
        s, ws = self._outer_nodes(lo, hi, self._rate(self.W + abs(phi)), lo_seg=16)
        inner = self._line_mu(
            -self.k * s, phi, np.maximum(A.lo, A.lo - s), np.minimum(A.hi, A.hi - s),
            conj=True,
        )
        return complex(a_part * (ws @ inner))

    def chi9(self, phi: float):
        self._begin("chi9")
        A = self.A
        lo1 = max(A.lo, phi - self.W + A.lo)
        hi1 = min(A.hi, phi + self.W + A.hi)
        lo1 = max(A.lo, A.lo + phi - A.hi)
        hi1 = min(A.hi, A.hi + phi - A.lo)
        if hi1 <= lo1:
            return 0.0
        ext12, extp = self._extents(lo1, hi1, A, phi)
        f1, w1 = self._outer_nodes(lo1, hi1, self._rate(ext12 + extp), lo_seg=16)
        g = self._line_mu(
            self.k * (phi - f1),
            f1,
            np.maximum(A.lo, A.lo - phi + f1),
            np.minimum(A.hi, A.hi - phi + f1),
        )
        lo9 = np.maximum(A.lo, phi - f1 - A.hi)
        hi9 = np.minimum(A.hi, phi - f1 - A.lo)
        width9 = np.maximum(hi9 - lo9, 0.0)
        nseg = self._nseg(self._rate(2.5 * self.W) * float(width9.max(initial=0.0)))
        t, wt = self._panels01(nseg)
        self._count(f1.size * t.size)
        f2p = lo9[:, None] + t[None, :] * width9[:, None]
        g9 = (np.conj(lk.mu(f2p, -f1[:, None], phi, self.link)) @ wt) * width9
        return complex(w1 @ (g * g9))

    def chi11(self, phi: float):
        self._begin("chi11")
        A = self.A
        lo1 = max(A.lo, A.lo + phi - A.hi)
        hi1 = min(A.hi, A.hi + phi - A.lo)
        if hi1 <= lo1:
            return 0.0
        ext12, extp = self._extents(lo1, hi1, A, phi)
        f1, w1 = self._outer_nodes(lo1, hi1, self._rate(ext12 + extp), lo_seg=24)
        inner = self._line_mu(
            self.k * (phi - f1),
            f1,
            np.maximum(A.lo, A.lo - phi + f1),
            np.minimum(A.hi, A.hi - phi + f1),
        )
        return abs(complex(w1 @ inner)) ** 2

    # -- term-set drivers -----------------------------------------------------

    def sci_like_set(self, phi: float, needed=None) -> dict:
        """The 11 self-channel-structure terms at (possibly shifted) output phi."""
        A = self.A
        res: dict[str, complex] = {}

        def want(name):
            return needed is None or name in needed

        res["chi1"] = self.chi1_island(A, A, A, phi) if want("chi1") else 0.0
        res["chi2"] = self.chi2_refl(A, A, phi) if want("chi2") else 0.0
        res["chi3"] = self.chi3_sci(phi) if want("chi3") else 0.0
        res["chi4"] = self.chi4(phi) if want("chi4") else 0.0
        res["chi5"] = self.chi5(phi) if want("chi5") else 0.0
        res["chi6"] = self.chi6(phi) if want("chi6") else 0.0
        res["chi7"] = self.chi7(phi) if want("chi7") else 0.0
        res["chi8"] = self.chi3_sq(A, A, phi, name="chi8") if want("chi8") else 0.0
        res["chi9"] = self.chi9(phi) if want("chi9") else 0.0
        res["chi10"] = self.chi3_mid(A, A, phi, name="chi10") if want("chi10") else 0.0
        res["chi11"] = self.chi11(phi) if want("chi11") else 0.0
        return res

    def x1_like_set(self, b_a: Band, b_b: Band, phi: float, needed=None) -> dict:
        res = {}
        res["chi1"] = (
            self.chi1_island(b_a, b_b, b_b, phi) if needed is None or "chi1" in needed else 0.0
        )
        res["chi2"] = (
            self.chi2_refl(b_a, b_b, phi) if needed is None or "chi2" in needed else 0.0
        )
        res["chi3"] = (
            self.chi3_sq(b_a, b_b, phi) if needed is None or "chi3" in needed else 0.0
        )
        return res

    def x2_like_set(self, b_a: Band, b_b: Band, phi: float, needed=None) -> dict:
        res = {}
        res["chi1"] = (
            self.chi1_island(b_b, b_a, b_a, phi) if needed is None or "chi1" in needed else 0.0
        )
        res["chi2"] = (
            self.chi2_refl(b_b, b_a, phi) if needed is None or "chi2" in needed else 0.0
        )
        res["chi3"] = (
            self.chi3_sq(b_b, b_a, phi) if needed is None or "chi3" in needed else 0.0
        )
        return res

    def x3_like_set(self, b_a: Band, b_b: Band, phi: float, needed=None) -> dict:
        res = {}
        chi1 = self.chi1_island(b_a, b_b, b_a, phi)
        res["chi1"] = chi1
        # the exchange-paired term has the identical mismatch u, hence equals chi1
        res["chi2"] = chi1
        res["chi3"] = (
            self.chi3_mid(b_b, b_a, phi) if needed is None or "chi3" in needed else 0.0
        )
        return res


# ---------------------------------------------------------------------------
# Island bookkeeping


def _half_count(wdm: WdmSpec) -> int:
    return (wdm.n_channels - 1) // 2


def m1_indices(wdm: WdmSpec) -> list[int]:
    return list(range(1, _half_count(wdm) + 1))


def m2_indices(wdm: WdmSpec) -> list[int]:
    return list(range(2, _half_count(wdm) + 1))


def m3_indices(wdm: WdmSpec) -> list[tuple[int, int]]:
    """(h, h') pairs: h' even -> h = h'/2; h' odd -> h = (h' -+ 1)/2."""
    pairs = []
    for hp in range(2, _half_count(wdm) + 1):
        if hp % 2 == 0:
            pairs.append((hp // 2, hp))
        else:
            pairs.append(((hp - 1) // 2, hp))
            pairs.append(((hp + 1) // 2, hp))
    return [(h, hp) for (h, hp) in pairs if 1 <= h <= _half_count(wdm) and h != hp]


def _classify_triple(c1: int, c2: int, c3: int) -> str:
    if c1 == 0 and c2 == 0 and c3 == 0:
        return "sci"
    if c1 == c2 == c3:
        return "x4"
    if (c1 == 0 and c2 == c3) or (c3 == 0 and c1 == c2):
        return "x1"
    if (c2 == 0 and c3 == 0) or (c1 == 0 and c2 == 0):
        return "x2"
    if c1 == 0 and c3 == 0:
        return "x3"
    if c2 == c3 and abs(c1) == 1 and c1 * c2 < 0:
        return "m1"
    if c1 == c2 and abs(c3) == 1 and c1 * c3 < 0:
        return "m1"
    if c2 == c3 and abs(c1) == 1 and c1 * c2 > 0 and abs(c2) >= 2:
        return "m2"
    if c1 == c2 and abs(c3) == 1 and c1 * c3 > 0 and abs(c1) >= 2:
        return "m2"
    if c1 == c3 and c1 != 0 and c2 != 0 and c2 != c1:
        return "m3"
    return "m0"


def region_map(wdm: WdmSpec, f: float = 0.0) -> dict:
    """All frequency-triple islands with nonempty support at output f.

    Maps (c1, c2, c3) channel-index triples to their region name; the map is
    a function, so the classification is overlap-free by construction.
    """
    H = _half_count(wdm)
    w = wdm.symbol_rate_hz
    out = {}
    for c1 in range(-H, H + 1):
        for c2 in range(-H, H + 1):
            for t in (-1, 0, 1):
                c3 = c2 - c1 + t
                if abs(c3) > H:
                    continue
                b1 = _band(c1 * wdm.spacing_hz, w)
                b2 = _band(c2 * wdm.spacing_hz, w)
                b3 = _band(c3 * wdm.spacing_hz, w)
                lo = max(b1.lo, b2.lo + f - b3.hi)
                hi = min(b1.hi, b2.hi + f - b3.lo)
                if hi > lo:
                    out[(c1, c2, c3)] = _classify_triple(c1, c2, c3)
    return out


def m0_triples(wdm: WdmSpec, f: float = 0.0) -> list[tuple[int, int, int]]:
    return sorted(t for t, name in region_map(wdm, f).items() if name == "m0")


def classify_point(f1: float, f2: float, f: float, wdm: WdmSpec) -> str | None:
    """Region name of a plane point (f1, f2) at output f, or None off-support."""

    def channel_of(x):
        if wdm.n_channels == 1:
            c = 0
        else:
            c = int(round(x / wdm.spacing_hz))
        H = _half_count(wdm)
        if abs(c) > H:
            return None
        if abs(x - c * wdm.spacing_hz) <= wdm.symbol_rate_hz / 2.0:
            return c
        return None

    c1 = channel_of(f1)
    c2 = channel_of(f2)
    c3 = channel_of(f - f1 + f2)
    if c1 is None or c2 is None or c3 is None:
        return None
    return _classify_triple(c1, c2, c3)


# ---------------------------------------------------------------------------
# Public per-term API (table-faithful values, pulse factors included)


def _two_pass(build, ctrl: QuadratureControl):
    coarse = build(ctrl.resolution * 0.5)
    fine = build(ctrl.resolution)
    values, errors = {}, {}
    for k, v in fine.items():
        values[k] = v
        errors[k] = abs(v - coarse[k])
    return ChiSet(values, errors)


def chi_sci(link: LinkSpec, wdm: WdmSpec, f: float, ctrl: QuadratureControl) -> ChiSet:
    """Self-channel coupling terms chi1..chi11 at output frequency f."""

    def build(res):
        eng = ChiEngine(link, wdm, ctrl, resolution=res)
        return {k: v * eng.ts6 for k, v in eng.sci_like_set(f).items()}

    return _two_pass(build, ctrl)


def chi_x4(link: LinkSpec, wdm: WdmSpec, h: int, f: float, ctrl: QuadratureControl) -> ChiSet:
    """Self-channel-structure terms of the h-th interferer (shifted windows)."""
    _check_h(wdm, h)

    def build(res):
        eng = ChiEngine(link, wdm, ctrl, resolution=res)
        phi = f - wdm.center_frequency(h)
        return {k: v * eng.ts6 for k, v in eng.sci_like_set(phi).items()}

    return _two_pass(build, ctrl)


def _check_h(wdm, h):
    if h == 0 or abs(h) > _half_count(wdm):
        raise ValueError(f"interferer index {h} out of range for {wdm.n_channels} channels")


def chi_xci(link: LinkSpec, wdm: WdmSpec, h: int, f: float, ctrl: QuadratureControl) -> ChiSet:
    """Cross-channel terms for interferer h: keys x1_chi*, x2_chi*, x3_chi*."""
    _check_h(wdm, h)

    def build(res):
        eng = ChiEngine(link, wdm, ctrl, resolution=res)
        a = eng.band(0.0)
        b = eng.band(wdm.center_frequency(h))
        out = {}
        for fam, vals in (
            ("x1", eng.x1_like_set(a, b, f)),
            ("x2", eng.x2_like_set(a, b, f)),
            ("x3", eng.x3_like_set(a, b, f)),
        ):
            for k, v in vals.items():
                out[f"{fam}_{k}"] = v * eng.ts6
        return out

    return _two_pass(build, ctrl)


def chi_mci(link: LinkSpec, wdm: WdmSpec, island, f: float, ctrl: QuadratureControl) -> ChiSet:
    """One multi-channel island: ('m1', h), ('m2', h) or ('m3', h, hprime)."""
    kind = island[0].lower()

    def build(res):
        eng = ChiEngine(link, wdm, ctrl, resolution=res)
        d = wdm.spacing_hz
        if kind == "m1":
            (_, h) = island
            if h not in m1_indices(wdm):
                raise ValueError(f"invalid M1 index {h}")
            vals = eng.x1_like_set(eng.band(-d), eng.band(h * d), f)
        elif kind == "m2":
            (_, h) = island
            if h not in m2_indices(wdm):
                raise ValueError(f"invalid M2 index {h}")
            vals = eng.x1_like_set(eng.band(d), eng.band(h * d), f)
        elif kind == "m3":
            (_, h, hp) = island
            if (h, hp) not in m3_indices(wdm):
                raise ValueError(f"invalid M3 pair {(h, hp)}")
            vals = eng.x3_like_set(eng.band(h * d), eng.band(hp * d), f)
        else:
            raise ValueError(f"unknown island kind {island!r}")
        return {k: v * eng.ts6 for k, v in vals.items()}

    return _two_pass(build, ctrl)


def gn_m0(link: LinkSpec, wdm: WdmSpec, f: float, ctrl: QuadratureControl,
          per_island: bool = False):
    """|mu|^2 integrals over the residual three-distinct-channel islands.

    Returns (value, error) where value sums the bare triple-spectrum islands
    (pulse factors included, no modulation weights); with per_island=True the
    value/error are dicts keyed by the channel-index triple.
    """
    if wdm.n_channels < 3:
        return ({}, {}) if per_island else (0.0, 0.0)
    triples = m0_triples(wdm, f)

    def build(res):
        eng = ChiEngine(link, wdm, ctrl, resolution=res)
        d = wdm.spacing_hz
        return {
            t: eng.chi1_island(
                eng.band(t[0] * d), eng.band(t[1] * d), eng.band(t[2] * d), f,
                name="m0",
            )
            * eng.ts6
            for t in triples
        }

    cs = _two_pass(build, ctrl)
    if per_island:
        return cs.values, cs.errors
    return sum(cs.values.values()), sum(cs.errors.values())
