"""Per-polarization NLI power coefficients: self-, cross- and multi-channel.

Assembles the coupling integrals from :mod:`nli4d.quadrature` with the
modulation coefficients from :mod:`nli4d.constellation` into eta values
(sigma^2_NLI = eta P^3, accumulated over the configured span count).  Launch
power never enters: every eta is per unit power cubed.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import constellation as con
from . import quadrature as qd
from .constellation import Constellation4D, MomentSet
from .link import LinkSpec, WdmSpec
from .quadrature import ChiEngine, QuadratureControl

__all__ = [
    "NliBreakdown",
    "eta_sci",
    "eta_xci",
    "eta_mci",
    "eta_total",
    "eta_total_from_moments",
    "fit_epsilon",
    "CONTRIBUTIONS",
]

CONTRIBUTIONS = ("sci", "x1", "x2", "x3", "x4", "m1", "m2", "m3", "m0")

_MANAKOV = (8.0 / 9.0) ** 2

_SCI_TERM_COEFS = {
    "chi1": ("phi1",),
    "chi2": ("phi2",),
    "chi3": ("phi3",),
    "chi4": ("psi1",),
    "chi5": ("psi2", "psi3"),
    "chi6": ("psi4",),
    "chi7": ("lam1", "lam2"),
    "chi8": ("lam3",),
    "chi9": ("lam4", "lam5"),
    "chi10": ("lam6",),
    "chi11": ("xi1",),
}

_X_TERM_COEFS = {
    "x1": {"chi1": ("phi4",), "chi2": ("phi5",), "chi3": ("phi6",)},
    "x2": {"chi1": ("psi5",), "chi2": ("psi6",), "chi3": ("psi7",)},
    "x3": {"chi1": ("lam7",), "chi2": ("lam8",), "chi3": ("lam9",)},
}


@dataclass
class NliBreakdown:
    """Eta coefficients [1/W^2] split by contribution and polarization."""

    n_spans: int
    parts: dict = field(default_factory=dict)        # name -> (eta_x, eta_y)
    per_channel: dict = field(default_factory=dict)  # family -> {h: (x, y)}
    errors: dict = field(default_factory=dict)       # name -> error bound
    eta_tilde: float | None = None                   # single-span total (x+y)
    epsilon: float | None = None
    config_hash: str = ""

    @property
    def eta_x(self) -> float:
        return sum(v[0] for v in self.parts.values())

    @property
    def eta_y(self) -> float:
        return sum(v[1] for v in self.parts.values())

    @property
    def eta_both(self) -> float:
        return self.eta_x + self.eta_y

    @property
    def error_total(self) -> float:
        return sum(self.errors.values())

    def part(self, name: str) -> tuple[float, float]:
        return self.parts.get(name, (0.0, 0.0))

    def rows(self) -> list[dict]:
        """Flat records (contribution, polarization, eta, dB, error)."""
        out = []
        for name in CONTRIBUTIONS:
            if name not in self.parts:
                continue
            ex, ey = self.parts[name]
            err = self.errors.get(name, 0.0)
            for pol, v in (("x", ex), ("y", ey)):
                out.append(
                    {
                        "contribution": name,
                        "polarization": pol,
                        "eta_linear": v,
                        "eta_db": 10.0 * math.log10(v) if v > 0 else float("-inf"),
                        "error_bound": err,
                    }
                )
        for pol, v in (("x", self.eta_x), ("y", self.eta_y)):
            out.append(
                {
                    "contribution": "total",
                    "polarization": pol,
                    "eta_linear": v,
                    "eta_db": 10.0 * math.log10(v) if v > 0 else float("-inf"),
                    "error_bound": self.error_total,
                }
            )
        return out

    def to_json(self) -> str:
        doc = {
            "n_spans": self.n_spans,
            "config_hash": self.config_hash,
            "eta_tilde": self.eta_tilde,
            "epsilon": self.epsilon,
            "eta": {k: list(v) for k, v in self.parts.items()},
            "eta_total": [self.eta_x, self.eta_y],
            "errors": self.errors,
            "per_channel": {
                fam: {str(h): list(v) for h, v in d.items()}
                for fam, d in self.per_channel.items()
            },
        }
        return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# helpers


def _f_nodes(wdm: WdmSpec, n: int):
    x, w = leggauss(n)
    half = wdm.symbol_rate_hz / 2.0
    return x * half, w * half


def _coef_scale(cs_list) -> float:
    return max(max(abs(c.phi1), abs(c.phi4), abs(c.psi5), abs(c.lam7)) for c in cs_list) + 1e-30


def _needed_terms(term_map, cs_list, scale) -> set:
    need = set()
    for term, names in term_map.items():
        mx = max(abs(getattr(c, n)) for c in cs_list for n in names)
        if mx > 1e-12 * scale:
            need.add(term)
    return need


def _assemble_sci(chi: dict, c: con.CoefficientSet, rs: float):
    """Self-channel spectral density bracket (no Manakov/gamma prefactor)."""
    re = lambda z: float(np.real(z))
    s2 = rs**3 * (
        c.phi1 * re(chi["chi1"]) + c.phi2 * re(chi["chi2"]) + c.phi3 * re(chi["chi3"])
    )
    s3 = rs**2 * (
        c.psi1 * re(chi["chi4"])
        + 2.0 * re(c.psi2 * chi["chi5"] + c.psi3 * np.conj(chi["chi5"]))
        + c.psi4 * re(chi["chi6"])
        + 2.0 * re(c.lam1 * chi["chi7"] + c.lam2 * np.conj(chi["chi7"]))
        + c.lam3 * re(chi["chi8"])
        + 2.0 * re(c.lam4 * chi["chi9"] + c.lam5 * np.conj(chi["chi9"]))
        + c.lam6 * re(chi["chi10"])
    )
    s4 = rs * c.xi1 * re(chi["chi11"])
    return s2 + s3 + s4


def _assemble_sci_err(chi_err: dict, chi: dict, c: con.CoefficientSet, rs: float):
    pairs = [
        (rs**3, "chi1", abs(c.phi1)), (rs**3, "chi2", abs(c.phi2)),
        (rs**3, "chi3", abs(c.phi3)), (rs**2, "chi4", abs(c.psi1)),
        (rs**2, "chi5", 2 * (abs(c.psi2) + abs(c.psi3))), (rs**2, "chi6", abs(c.psi4)),
        (rs**2, "chi7", 2 * (abs(c.lam1) + abs(c.lam2))), (rs**2, "chi8", abs(c.lam3)),
        (rs**2, "chi9", 2 * (abs(c.lam4) + abs(c.lam5))), (rs**2, "chi10", abs(c.lam6)),
        (rs, "chi11", abs(c.xi1)),
    ]
    err = sum(p * w * chi_err.get(t, 0.0) for p, t, w in pairs)
    # imaginary residue of terms that are real after exact integration
    for t, w, p in (("chi2", abs(c.phi2), rs**3), ("chi4", abs(c.psi1), rs**2),
                    ("chi6", abs(c.psi4), rs**2)):
        err += p * w * abs(np.imag(chi[t]))
    return err


def _assemble_xblock(chi: dict, c: con.CoefficientSet, rs: float, family: str):
    re = lambda z: float(np.real(z))
    if family == "x1":
        a, b, d = c.phi4, c.phi5, c.phi6
    elif family == "x2":
        a, b, d = c.psi5, c.psi6, c.psi7
    else:
        a, b, d = c.lam7, c.lam8, c.lam9
    return rs**3 * (a * re(chi["chi1"]) + b * re(chi["chi2"])) + rs**2 * d * re(chi["chi3"])


def _assemble_xblock_err(chi_err: dict, chi: dict, c, rs: float, family: str):
    if family == "x1":
        a, b, d = c.phi4, c.phi5, c.phi6
    elif family == "x2":
        a, b, d = c.psi5, c.psi6, c.psi7
    else:
        a, b, d = c.lam7, c.lam8, c.lam9
    err = rs**3 * (abs(a) * chi_err.get("chi1", 0.0) + abs(b) * chi_err.get("chi2", 0.0))
    err += rs**2 * abs(d) * chi_err.get("chi3", 0.0)
    err += rs**3 * abs(b) * abs(np.imag(chi["chi2"]))
    return err


class _EtaContext:
    """Shared engines, f-grid, and per-channel moment data for one config."""

    def __init__(self, link, wdm, ctrl, m_coi, m_ints):
        self.link, self.wdm, self.ctrl = link, wdm, ctrl
        self.eng = ChiEngine(link, wdm, ctrl, resolution=ctrl.resolution)
        self.eng_lo = ChiEngine(link, wdm, ctrl, resolution=ctrl.resolution * 0.5)
        self.fs, self.fw = _f_nodes(wdm, ctrl.f_nodes)
        self.m_coi = m_coi
        self.m_ints = m_ints  # dict h -> MomentSet
        self.rs = wdm.symbol_rate_hz
        self.pref = _MANAKOV * link.gamma**2

    def moments_of(self, h: int) -> MomentSet:
        return self.m_coi if h == 0 else self.m_ints[h]

    def chi_pair(self, fn_name, *args, needed=None):
        """(fine, coarse) term dicts, pulse factors included."""
        fine = getattr(self.eng, fn_name)(*args, needed=needed)
        coarse = getattr(self.eng_lo, fn_name)(*args, needed=needed)
        ts6 = self.eng.ts6
        vals = {k: v * ts6 for k, v in fine.items()}
        errs = {k: abs(vals[k] - coarse[k] * ts6) for k in fine}
        return vals, errs

    def integrate_sci_like(self, coefs_xy, offset=0.0):
        """eta (x, y, err) of a self-channel-structure block at window offset."""
        cx, cy = coefs_xy
        needed = _needed_terms(_SCI_TERM_COEFS, [cx, cy], _coef_scale([cx, cy]))
        ex = ey = err = 0.0
        for f, w in zip(self.fs, self.fw):
            vals, errs = self.chi_pair("sci_like_set", f - offset, needed=needed)
            ex += w * _assemble_sci(vals, cx, self.rs)
            ey += w * _assemble_sci(vals, cy, self.rs)
            err += w * max(
                _assemble_sci_err(errs, vals, cx, self.rs),
                _assemble_sci_err(errs, vals, cy, self.rs),
            )
        return self.pref * ex, self.pref * ey, self.pref * err

    def integrate_xblock(self, family, set_name, band_a, band_b, coefs_xy):
        cx, cy = coefs_xy
        needed = _needed_terms(
            _X_TERM_COEFS[family], [cx, cy], _coef_scale([cx, cy])
        )
        needed.add("chi1")
        ex = ey = err = 0.0
        for f, w in zip(self.fs, self.fw):
            vals, errs = self.chi_pair(set_name, band_a, band_b, f, needed=needed)
            ex += w * _assemble_xblock(vals, cx, self.rs, family)
            ey += w * _assemble_xblock(vals, cy, self.rs, family)
            err += w * max(
                _assemble_xblock_err(errs, vals, cx, self.rs, family),
                _assemble_xblock_err(errs, vals, cy, self.rs, family),
            )
        return self.pref * ex, self.pref * ey, self.pref * err


def _prepare(coi: Constellation4D, ints, wdm: WdmSpec):
    if abs(coi.mean_power() - 1.0) > 1e-9:
        raise ValueError("channel-of-interest constellation must be normalized")
    hs = wdm.interferer_indices
    if ints is None:
        ints = [coi] * len(hs)
    if len(ints) != len(hs):
        raise ValueError(f"need {len(hs)} interferer constellations, got {len(ints)}")
    m_ints = {}
    for h, c in zip(hs, ints):
        if abs(c.mean_power() - 1.0) > 1e-9:
            raise ValueError(f"interferer {h} constellation must be normalized")
        m_ints[h] = con.moments(c)
    return con.moments(coi), m_ints


# ---------------------------------------------------------------------------
# public eta operations


def eta_sci(coi: Constellation4D, link: LinkSpec, wdm: WdmSpec,
            ctrl: QuadratureControl | None = None):
    """Self-channel eta (x, y) in 1/W^2 for the configured span count."""
    ctrl = ctrl or QuadratureControl()
    m = con.moments(coi)
    ctx = _EtaContext(link, wdm, ctrl, m, {})
    cs = (con.coefficients(m, "x"), con.coefficients(m, "y"))
    ex, ey, _ = ctx.integrate_sci_like(cs)
    return ex, ey


def eta_xci(coi: Constellation4D, ints, link: LinkSpec, wdm: WdmSpec,
            ctrl: QuadratureControl | None = None):
    """Cross-channel eta: totals (x, y) plus per-channel, per-family breakdown."""
    ctrl = ctrl or QuadratureControl()
    m_coi, m_ints = _prepare(coi, ints, wdm)
    ctx = _EtaContext(link, wdm, ctrl, m_coi, m_ints)
    parts, per_channel, errors = _xci_into(ctx)
    tx = sum(parts[f][0] for f in ("x1", "x2", "x3", "x4"))
    ty = sum(parts[f][1] for f in ("x1", "x2", "x3", "x4"))
    return tx, ty, per_channel


def _xci_into(ctx: _EtaContext):
    wdm = ctx.wdm
    parts = {f: (0.0, 0.0) for f in ("x1", "x2", "x3", "x4")}
    errors = {f: 0.0 for f in ("x1", "x2", "x3", "x4")}
    per_channel = {f: {} for f in ("x1", "x2", "x3", "x4")}
    a = ctx.eng.band(0.0)
    for h in wdm.interferer_indices:
        b = ctx.eng.band(wdm.center_frequency(h))
        mi = ctx.moments_of(h)
        cs = (
            con.xci_coefficients(ctx.m_coi, mi, "x"),
            con.xci_coefficients(ctx.m_coi, mi, "y"),
        )
        for family, set_name in (
            ("x1", "x1_like_set"), ("x2", "x2_like_set"), ("x3", "x3_like_set")
        ):
            ex, ey, er = ctx.integrate_xblock(family, set_name, a, b, cs)
            per_channel[family][h] = (ex, ey)
            parts[family] = (parts[family][0] + ex, parts[family][1] + ey)
            errors[family] += er
        # X4: self-channel structure on the interferer's own moments/windows
        cs4 = (con.coefficients(mi, "x"), con.coefficients(mi, "y"))
        ex, ey, er = ctx.integrate_sci_like(cs4, offset=wdm.center_frequency(h))
        per_channel["x4"][h] = (ex, ey)
        parts["x4"] = (parts["x4"][0] + ex, parts["x4"][1] + ey)
        errors["x4"] += er
    return parts, per_channel, errors


def eta_mci(coi: Constellation4D, ints, link: LinkSpec, wdm: WdmSpec,
            ctrl: QuadratureControl | None = None):
    """Multi-channel eta (x, y): M1 + M2 + M3 islands (quadrant-doubled) + M0."""
    ctrl = ctrl or QuadratureControl()
    if wdm.n_channels < 3:
        return 0.0, 0.0
    m_coi, m_ints = _prepare(coi, ints, wdm)
    ctx = _EtaContext(link, wdm, ctrl, m_coi, m_ints)
    parts, errors = _mci_into(ctx)
    tx = sum(parts[f][0] for f in ("m1", "m2", "m3", "m0"))
    ty = sum(parts[f][1] for f in ("m1", "m2", "m3", "m0"))
    return tx, ty


def _mci_into(ctx: _EtaContext):
    wdm = ctx.wdm
    d = wdm.spacing_hz
    parts = {f: (0.0, 0.0) for f in ("m1", "m2", "m3", "m0")}
    errors = {f: 0.0 for f in ("m1", "m2", "m3", "m0")}

    def add(name, res, factor=2.0):
        ex, ey, er = res
        parts[name] = (parts[name][0] + factor * ex, parts[name][1] + factor * ey)
        errors[name] += factor * er

    for h in qd.m1_indices(wdm):
        cs = (
            con.xci_coefficients(ctx.moments_of(-1), ctx.moments_of(h), "x"),
            con.xci_coefficients(ctx.moments_of(-1), ctx.moments_of(h), "y"),
        )
        add("m1", ctx.integrate_xblock(
            "x1", "x1_like_set", ctx.eng.band(-d), ctx.eng.band(h * d), cs))
    for h in qd.m2_indices(wdm):
        cs = (
            con.xci_coefficients(ctx.moments_of(1), ctx.moments_of(h), "x"),
            con.xci_coefficients(ctx.moments_of(1), ctx.moments_of(h), "y"),
        )
        add("m2", ctx.integrate_xblock(
            "x1", "x1_like_set", ctx.eng.band(d), ctx.eng.band(h * d), cs))
    for (h, hp) in qd.m3_indices(wdm):
        cs = (
            con.xci_coefficients(ctx.moments_of(h), ctx.moments_of(hp), "x"),
            con.xci_coefficients(ctx.moments_of(h), ctx.moments_of(hp), "y"),
        )
        add("m3", ctx.integrate_xblock(
            "x3", "x3_like_set", ctx.eng.band(h * d), ctx.eng.band(hp * d), cs))

    # M0: residual three-distinct-channel islands, GN-weighted (second-order
    # moments only, per the island's channels; modulation corrections on these
    # islands are neglected by design).
    def m0_weight(t, swap):
        def p2(h):
            m = ctx.moments_of(h)
            m = m.swapped() if swap else m
            return m.m(1, 1, 0, 0).real, m.m(0, 0, 1, 1).real

        (ax2, ay2), (bx2, by2), (cx2, cy2) = p2(t[0]), p2(t[1]), p2(t[2])
        return 2.0 * ax2 * bx2 * cx2 + ay2 * by2 * cx2

    ex = ey = er = 0.0
    for f, w in zip(ctx.fs, ctx.fw):
        triples = qd.m0_triples(wdm, f)
        if not triples:
            continue
        for t in triples:
            bands = [ctx.eng.band(c * d) for c in t]
            v = ctx.eng.chi1_island(*bands, f) * ctx.eng.ts6
            v_lo = ctx.eng_lo.chi1_island(*bands, f) * ctx.eng.ts6
            ex += w * ctx.rs**3 * m0_weight(t, False) * v
            ey += w * ctx.rs**3 * m0_weight(t, True) * v
            er += w * ctx.rs**3 * max(m0_weight(t, False), m0_weight(t, True)) * abs(v - v_lo)
    parts["m0"] = (ctx.pref * ex, ctx.pref * ey)
    errors["m0"] = ctx.pref * er
    return parts, errors


def eta_total(coi: Constellation4D, ints, link: LinkSpec, wdm: WdmSpec,
              ctrl: QuadratureControl | None = None,
              with_accumulation: bool = True) -> NliBreakdown:
    """Full breakdown: SCI + XCI (X1..X4 per channel) + MCI (M0..M3).

    With ``with_accumulation`` the single-span coefficient and the coherence
    exponent are fitted from exact evaluations at 1 and 2 spans, so that
    eta(Ns) = eta_tilde * Ns^(1+eps) reproduces the configured span count.
    """
    ctrl = ctrl or QuadratureControl()
    m_coi, m_ints = _prepare(coi, ints, wdm)
    bd = _eta_total_from_moments(m_coi, m_ints, link, wdm, ctrl)
    if with_accumulation:
        eps, eta1 = fit_epsilon_from_moments(m_coi, m_ints, link, wdm, ctrl)
        bd.epsilon = eps
        bd.eta_tilde = bd.eta_both / link.n_spans ** (1.0 + eps)
    bd.config_hash = _config_hash(coi, ints, link, wdm, ctrl)
    return bd


def eta_total_from_moments(m_coi: MomentSet, m_ints: dict, link: LinkSpec,
                           wdm: WdmSpec, ctrl: QuadratureControl | None = None
                           ) -> NliBreakdown:
    """Breakdown from moment tables directly (no point list needed).

    ``m_ints`` maps interferer index h to its MomentSet; analytic surrogates
    such as circular-Gaussian moments plug in here.
    """
    ctrl = ctrl or QuadratureControl()
    return _eta_total_from_moments(m_coi, m_ints, link, wdm, ctrl)


def _eta_total_from_moments(m_coi, m_ints, link, wdm, ctrl) -> NliBreakdown:
    ctx = _EtaContext(link, wdm, ctrl, m_coi, m_ints)
    bd = NliBreakdown(n_spans=link.n_spans)
    cs = (con.coefficients(m_coi, "x"), con.coefficients(m_coi, "y"))
    ex, ey, er = ctx.integrate_sci_like(cs)
    bd.parts["sci"] = (ex, ey)
    bd.errors["sci"] = er
    if wdm.n_channels > 1:
        parts, per_channel, errors = _xci_into(ctx)
        bd.parts.update(parts)
        bd.per_channel.update(per_channel)
        bd.errors.update(errors)
    if wdm.n_channels >= 3:
        parts, errors = _mci_into(ctx)
        bd.parts.update(parts)
        bd.errors.update(errors)
    return bd


def fit_epsilon(coi: Constellation4D, ints, link: LinkSpec, wdm: WdmSpec,
                ctrl: QuadratureControl | None = None):
    """Coherence exponent from the exact 1- and 2-span totals.

    eps = log2(eta(2)/eta(1)) - 1; also returns eta(1) (the single-span
    signal-signal coefficient, both polarizations).
    """
    ctrl = ctrl or QuadratureControl()
    m_coi, m_ints = _prepare(coi, ints, wdm)
    return fit_epsilon_from_moments(m_coi, m_ints, link, wdm, ctrl)


def fit_epsilon_from_moments(m_coi, m_ints, link, wdm, ctrl):
    e1 = _eta_total_from_moments(m_coi, m_ints, link.with_spans(1), wdm, ctrl).eta_both
    e2 = _eta_total_from_moments(m_coi, m_ints, link.with_spans(2), wdm, ctrl).eta_both
    if e1 <= 0 or e2 <= 0:
        raise ValueError("nonpositive eta in coherence fit")
    return math.log2(e2 / e1) - 1.0, e1


def _config_hash(coi, ints, link, wdm, ctrl) -> str:
    payload = {
        "coi": [coi.label, coi.points.shape[0], float(coi.points.sum())],
        "ints": [c.label for c in (ints or [])],
        "link": [link.alpha_db_km, link.dispersion_ps_nm_km, link.gamma_w_km,
                 link.span_length_km, link.n_spans, link.noise_figure_db, link.amplifier],
        "wdm": [wdm.symbol_rate_hz, wdm.n_channels, wdm.spacing_hz, wdm.rolloff, wdm.pulse],
        "ctrl": [ctrl.rel_tol, ctrl.f_nodes, ctrl.resolution],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]
