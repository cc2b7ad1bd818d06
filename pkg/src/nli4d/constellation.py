"""Dual-polarization 4D constellations and their statistical moments.

A constellation is a set of M points in 4 real dimensions, interpreted as two
complex symbols (a_x, a_y) transmitted jointly on the two polarizations, with
an associated probability mass function.  Everything the interference model
needs from a format is a finite table of moments E{a_x^p a_x*^q a_y^r a_y*^s}
up to sixth order, from which the per-polarization coupling coefficients
(phi/psi/lambda/xi families) are assembled.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "Constellation4D",
    "MomentSet",
    "CoefficientSet",
    "ConstellationError",
    "load",
    "loads",
    "normalize",
    "moments",
    "gaussian_moments",
    "coefficients",
    "xci_coefficients",
    "bundled_format_path",
    "load_labeling",
]

_FORMATS_DIR = Path(__file__).parent / "formats"


class ConstellationError(ValueError):
    """Malformed constellation data or an operation on an unsuitable one."""


@dataclass(frozen=True)
class Constellation4D:
    """M-point DP-4D format: rows are (Re a_x, Im a_x, Re a_y, Im a_y)."""

    points: np.ndarray
    probs: np.ndarray
    label: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        pr = np.asarray(self.probs, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 4:
            raise ConstellationError(f"points must be (M, 4), got {pts.shape}")
        if pts.shape[0] == 0:
            raise ConstellationError("empty constellation")
        if pr.shape != (pts.shape[0],):
            raise ConstellationError("probs length does not match point count")
        if np.any(pr < 0) or not np.all(np.isfinite(pr)):
            raise ConstellationError("probabilities must be finite and nonnegative")
        if abs(pr.sum() - 1.0) > 1e-12:
            raise ConstellationError(f"probabilities sum to {pr.sum()!r}, not 1")
        if not np.all(np.isfinite(pts)):
            raise ConstellationError("non-finite coordinate")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def ax(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]

    @property
    def ay(self) -> np.ndarray:
        return self.points[:, 2] + 1j * self.points[:, 3]

    def mean_power(self) -> float:
        """Probability-weighted mean 4D symbol energy."""
        return float(self.probs @ (self.points**2).sum(axis=1))

    def power_per_pol(self) -> tuple[float, float]:
        px = float(self.probs @ np.abs(self.ax) ** 2)
        py = float(self.probs @ np.abs(self.ay) ** 2)
        return px, py

    def swapped_polarizations(self) -> "Constellation4D":
        pts = self.points[:, [2, 3, 0, 1]]
        return Constellation4D(pts, self.probs, self.label + "/swap")

    def rotated(self, theta: float) -> "Constellation4D":
        """Joint phase rotation of both polarizations by theta."""
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        pts = np.empty_like(self.points)
        pts[:, 0:2] = self.points[:, 0:2] @ rot.T
        pts[:, 2:4] = self.points[:, 2:4] @ rot.T
        return Constellation4D(pts, self.probs, self.label)

    def validate(self) -> None:
        """Reject formats the model's derivation does not cover.

        A nonzero mean is a hard error; a per-polarization power imbalance is
        allowed (the model handles asymmetric formats) and only warned about.
        """
        m_x = self.probs @ self.ax
        m_y = self.probs @ self.ay
        if abs(m_x) > 1e-9 or abs(m_y) > 1e-9:
            raise ConstellationError(
                f"nonzero mean: E{{a_x}}={m_x:.3e}, E{{a_y}}={m_y:.3e}"
            )
        px, py = self.power_per_pol()
        if abs(px - py) > 1e-9 * max(px + py, 1e-300):
            warnings.warn(
                f"{self.label or 'constellation'}: per-polarization powers differ "
                f"({px:.6f} vs {py:.6f})",
                stacklevel=2,
            )


def loads(text: str, fmt: str = "auto", label: str = "") -> Constellation4D:
    """Parse the plain-text point list format.

    One point per line, whitespace-separated; 4 columns (uniform probabilities)
    or 5 columns with the probability last; '#' starts a comment.
    """
    rows, prob_col = [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) not in (4, 5):
            raise ConstellationError(
                f"line {lineno}: expected 4 or 5 fields, got {len(fields)}"
            )
        want = {"rows4": 4, "rows4+prob": 5}.get(fmt)
        if want is not None and len(fields) != want:
            raise ConstellationError(
                f"line {lineno}: expected {want} fields for format {fmt!r}"
            )
        if prob_col is None:
            prob_col = len(fields) == 5
        elif prob_col != (len(fields) == 5):
            raise ConstellationError(f"line {lineno}: inconsistent column count")
        try:
            vals = [float(tok) for tok in fields]
        except ValueError as exc:
            raise ConstellationError(f"line {lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise ConstellationError(f"line {lineno}: non-finite value")
        rows.append(vals)
    if not rows:
        raise ConstellationError("no points found")
    arr = np.array(rows)
    if prob_col:
        probs = arr[:, 4]
        s = probs.sum()
        if s <= 0:
            raise ConstellationError("probabilities sum to zero")
        probs = probs / s
    else:
        probs = np.full(len(rows), 1.0 / len(rows))
    return Constellation4D(arr[:, :4], probs, label)


def load(path, fmt: str = "auto") -> Constellation4D:
    """Load a constellation from a text file. See :func:`loads`."""
    p = Path(path)
    return loads(p.read_text(), fmt=fmt, label=p.stem)


def bundled_format_path(name: str) -> Path:
    """Path of a constellation shipped with the package (e.g. 'cube4_16')."""
    p = _FORMATS_DIR / f"{name}.txt"
    if not p.exists():
        avail = sorted(q.stem for q in _FORMATS_DIR.glob("*.txt") if not q.stem.endswith("_bits"))
        raise ConstellationError(f"unknown bundled format {name!r}; available: {avail}")
    return p


def load_labeling(name_or_path) -> np.ndarray:
    """Load a bit labeling (one bit string per constellation row) as (M, m) ints."""
    p = Path(name_or_path)
    if not p.exists():
        p = _FORMATS_DIR / f"{name_or_path}_bits.txt"
    words = [w for w in p.read_text().split() if not w.startswith("#")]
    bits = np.array([[int(c) for c in w] for w in words], dtype=int)
    return bits


def normalize(c: Constellation4D) -> Constellation4D:
    """Scale to unit mean 4D symbol energy (geometry preserved)."""
    p = c.mean_power()
    if p <= 0:
        raise ConstellationError("cannot normalize an all-zero constellation")
    return replace(c, points=c.points / math.sqrt(p))


# ---------------------------------------------------------------------------
# Moments


def _signatures() -> list[tuple[int, int, int, int]]:
    sigs = []
    for order in range(1, 7):
        for p in range(order + 1):
            for q in range(order + 1 - p):
                for r in range(order + 1 - p - q):
                    s = order - p - q - r
                    sigs.append((p, q, r, s))
    return sigs


_SIGS = _signatures()


@dataclass(frozen=True)
class MomentSet:
    """Exact expectations E{a_x^p a_x*^q a_y^r a_y*^s} for orders 1 through 6.

    Keys are the exponent tuples (p, q, r, s).  Second- and higher-order pure
    magnitude moments (p == q, r == s) are real by construction.
    """

    table: dict = field(repr=False)

    def m(self, p: int, q: int, r: int, s: int) -> complex:
        return self.table[(p, q, r, s)]

    def swapped(self) -> "MomentSet":
        """Moments of the polarization-swapped constellation (x <-> y)."""
        return MomentSet({(r, s, p, q): v for (p, q, r, s), v in self.table.items()})

    def conjugated(self) -> "MomentSet":
        return MomentSet({(q, p, s, r): v.conjugate() for (p, q, r, s), v in self.table.items()})

    def cross_pol_zeroed(self) -> "MomentSet":
        """Zero every phase-bearing cross-polarization moment.

        Keeps magnitude-type mixed moments such as E{|a_x|^2 |a_y|^2}; kills
        anything with net phase in both polarizations (p != q and r != s).
        """
        out = {}
        for (p, q, r, s), v in self.table.items():
            out[(p, q, r, s)] = 0.0 if (p != q and r != s) else v
        return MomentSet(out)


def moments(c: Constellation4D) -> MomentSet:
    """Probability-weighted moment table of a (normalized) constellation."""
    ax, ay = c.ax, c.ay
    cax, cay = ax.conj(), ay.conj()
    pow_ax = [np.ones_like(ax)]
    pow_cax = [np.ones_like(ax)]
    pow_ay = [np.ones_like(ax)]
    pow_cay = [np.ones_like(ax)]
    for _ in range(6):
        pow_ax.append(pow_ax[-1] * ax)
        pow_cax.append(pow_cax[-1] * cax)
        pow_ay.append(pow_ay[-1] * ay)
        pow_cay.append(pow_cay[-1] * cay)
    pr = c.probs
    table = {}
    for (p, q, r, s) in _SIGS:
        val = pr @ (pow_ax[p] * pow_cax[q] * pow_ay[r] * pow_cay[s])
        if p == q and r == s:
            val = val.real  # magnitude moment
        table[(p, q, r, s)] = complex(val) if not isinstance(val, float) else val
    return MomentSet(table)


def gaussian_moments(power_x: float = 0.5, power_y: float = 0.5) -> MomentSet:
    """Analytic moment table of independent circular complex Gaussians.

    E{|a|^(2k)} = k! sigma^(2k); every phase-bearing moment vanishes.  This is
    the surrogate whose coefficients collapse the model to its Gaussian-noise
    limit.
    """
    table = {}
    for (p, q, r, s) in _SIGS:
        if p == q and r == s:
            table[(p, q, r, s)] = (
                math.factorial(p) * power_x**p * math.factorial(r) * power_y**r
            )
        else:
            table[(p, q, r, s)] = 0.0
    return MomentSet(table)


# ---------------------------------------------------------------------------
# Modulation-dependent coefficients.
#
# The monomial tables below follow the published coefficient rows verbatim,
# with two OCR-damaged entries repaired:
#   * lam3: the unreadable factor in "4 E{?} E{|ax|^2 |ay|^2}" must be
#     E{|ax|^2}; any other reading breaks the Gaussian reduction lam3 -> 0.
#   * xi1: the unreadable term "-4 E{ax ay*} E{...}" must read
#     -4 E{ax ay*} E{ax* ay |ax|^2}; it is the conjugate-partner of the
#     adjacent -4 E{ax ay} E*{ax ay |ax|^2} term and the only reading with
#     zero net phase degree (required by joint-phase invariance).
#   * psi7: the final product's printed weight (-4) must be -1; psi7 is the
#     a<->b mirror of phi6 and the Gaussian reduction psi7 -> 0 fixes it.


@dataclass(frozen=True)
class CoefficientSet:
    """The 23 coupling coefficients for one polarization orientation.

    phi1..phi3, psi1..psi4, lam1..lam6 and xi1 weight the self-channel terms;
    phi4..phi6, psi5..psi7 and lam7..lam9 weight the cross-channel terms (the
    'a' moments come from the channel of interest, the 'b' moments from the
    interferer).
    """

    phi1: float
    phi2: float
    phi3: float
    psi1: float
    psi2: complex
    psi3: complex
    psi4: float
    lam1: complex
    lam2: complex
    lam3: float
    lam4: complex
    lam5: complex
    lam6: float
    xi1: float
    phi4: float
    phi5: float
    phi6: float
    psi5: float
    psi6: float
    psi7: float
    lam7: float
    lam8: float
    lam9: float
    orientation: str = "x"


def _sci_rows(E) -> dict:
    ax2 = E(1, 1, 0, 0).real      # E{|ax|^2}
    ay2 = E(0, 0, 1, 1).real
    ax4 = E(2, 2, 0, 0).real      # E{|ax|^4}
    ay4 = E(0, 0, 2, 2).real
    ax6 = E(3, 3, 0, 0).real
    ax2ay2 = E(1, 1, 1, 1).real   # E{|ax|^2 |ay|^2}
    ax4ay2 = E(2, 2, 1, 1).real
    ax2ay4 = E(1, 1, 2, 2).real
    axax = E(2, 0, 0, 0)          # E{ax^2}
    ayay = E(0, 0, 2, 0)
    axay = E(1, 0, 1, 0)          # E{ax ay}
    axcy = E(1, 0, 0, 1)          # E{ax ay*}
    cxay = E(0, 1, 1, 0)          # E{ax* ay}
    ax3 = E(3, 0, 0, 0)           # E{ax^3}
    ax_ax2 = E(2, 1, 0, 0)        # E{ax |ax|^2}
    cx_ax2 = E(1, 2, 0, 0)        # E{ax* |ax|^2}
    ax_ay2 = E(1, 0, 1, 1)        # E{ax |ay|^2}
    ax2_ay = E(1, 1, 1, 0)        # E{|ax|^2 ay}
    ax2_cy = E(1, 1, 0, 1)        # E{|ax|^2 ay*}
    ay_ay2 = E(0, 0, 2, 1)        # E{ay |ay|^2}
    cy_ay2 = E(0, 0, 1, 2)        # E{ay* |ay|^2}
    axax_ax2 = E(3, 1, 0, 0)      # E{ax^2 |ax|^2}
    axax_ay = E(2, 0, 1, 0)       # E{ax^2 ay}
    axax_cy = E(2, 0, 0, 1)       # E{ax^2 ay*}
    ax_ayay = E(1, 0, 2, 0)       # E{ax ay^2}
    cx_ayay = E(0, 1, 2, 0)       # E{ax* ay^2}
    ax2_ayay = E(1, 1, 2, 0)      # E{|ax|^2 ay^2}
    axax_ay2 = E(2, 0, 1, 1)      # E{ax^2 |ay|^2}
    axay_ax2 = E(2, 1, 1, 0)      # E{ax ay |ax|^2}
    axay_ay2 = E(1, 0, 2, 1)      # E{ax ay |ay|^2}
    axcy_ay2 = E(1, 0, 1, 2)      # E{ax ay* |ay|^2}
    cxay_ax2 = E(1, 2, 1, 0)      # E{ax* ay |ax|^2}

    phi1 = (
        2 * ax2**3
        + 4 * ax2 * abs(axcy) ** 2
        + ax2 * ay2**2
        + abs(axcy) ** 2 * ay2
    )
    phi2 = (
        4 * ax2 * abs(axax) ** 2
        + ax2 * abs(ayay) ** 2
        + 4 * ax2 * abs(axay) ** 2
        + abs(axay) ** 2 * ay2
        + 2 * (axay * cxay * ayay.conjugate()
               + 2 * axax.conjugate() * axay * axcy).real
    )
    phi3 = (
        ax2 * abs(axax) ** 2
        + abs(axay) ** 2 * ay2
        + 2 * (axax * axay.conjugate() * cxay).real
    )
    psi1 = (
        4 * abs(ax_ax2) ** 2
        + 4 * abs(ax2_ay) ** 2
        + (ax2_ay * cy_ay2 + ax2_cy * ay_ay2).real
        + abs(ax_ay2) ** 2
        + abs(cx_ayay) ** 2
        + 2 * (cx_ax2 * ax_ay2).real
    )
    psi2 = (
        2 * abs(ax_ax2) ** 2
        + 2 * abs(ax2_ay) ** 2
        + ax2_cy * ay_ay2
        + abs(ax_ay2) ** 2
    )
    psi3 = cx_ax2 * ax_ay2 + abs(axax_cy) ** 2
    psi4 = abs(ax3) ** 2 + 2 * abs(axax_ay) ** 2 + abs(ax_ayay) ** 2
    lam1 = (
        -3 * ax2 * abs(axax) ** 2
        + axax_ax2.conjugate() * axax
        - abs(axax) ** 2 * ay2
        - 2 * abs(axay) ** 2 * ay2
        + axax * axax_ay2.conjugate()
        - 2 * axax * axay.conjugate() * cxay
        + axay * axay_ay2.conjugate()
        - axay * cxay * ayay.conjugate()
    )
    lam2 = (
        -2 * ax2 * abs(axay) ** 2
        + axay * axay_ax2.conjugate()
        - axax * axay.conjugate() * cxay
    )
    lam3 = (
        4 * ax4 * ax2
        - 4 * ax2 * abs(axax) ** 2
        - 8 * ax2**3
        + 4 * ax2 * ax2ay2          # repaired factor, see module comment
        - 12 * ax2 * abs(axcy) ** 2
        - 4 * ax2 * abs(axay) ** 2
        - 4 * ax2**2 * ay2
        - 3 * ax2 * ay2**2
        - ax2 * abs(ayay) ** 2
        + ax2ay2 * ay2
        + ax2 * ay4
        - 5 * abs(axcy) ** 2 * ay2
        - abs(axay) ** 2 * ay2
        + 2 * (
            2 * axcy * cxay_ax2
            - axay * cxay * ayay.conjugate()
            + cxay * axcy_ay2
            - 2 * axax.conjugate() * axay * axcy
        ).real
    )
    lam4 = (
        -6 * ax2 * abs(axax) ** 2
        + 2 * axax_ax2.conjugate() * axax
        + 4 * ax2 * abs(axay) ** 2
        - ax2 * abs(ayay) ** 2
        + ax2_ayay.conjugate() * ayay
        + 2 * axay * axay_ax2.conjugate()
        - 2 * abs(axay) ** 2 * ay2
        - 2 * axax.conjugate() * axay * axcy
        + axay * axay_ay2.conjugate()
        - axay.conjugate() * axcy * ayay
        - 2 * (axay.conjugate() * axcy * ayay).real
    )
    lam5 = (
        -2 * ax2 * abs(axay) ** 2
        + axay * axay_ax2.conjugate()
        - abs(axax) ** 2 * ay2
        - axax.conjugate() * axay * axcy
        - 2 * (axax * axay.conjugate() * cxay).real
    )
    lam6 = (
        -2 * ax2**3
        + ax4 * ax2
        - ax2 * abs(axax) ** 2
        - 4 * ax2 * abs(axcy) ** 2
        - ax2 * ay2**2
        + ax2ay2 * ay2
        - abs(axcy) ** 2 * ay2
        - abs(axay) ** 2 * ay2
        + 2 * (axcy * cxay_ax2 - axax * axay.conjugate() * cxay).real
    )
    cxay_ay2 = E(0, 1, 2, 1)      # E{ax* ay |ay|^2}
    xi1 = (
        ax6
        - 9 * ax4 * ax2
        + 12 * ax2**3
        - 2 * ax4 * ay2
        + ax2ay4
        - 8 * ax2 * ax2ay2
        - 4 * ax2ay2 * ay2
        + 2 * ax4ay2
        - ax2 * ay4
        + 4 * ax2 * ay2**2
        + 8 * ax2**2 * ay2
        + 18 * ax2 * abs(axax) ** 2
        - abs(ax3) ** 2
        - 9 * abs(ax_ax2) ** 2
        + 2 * ax2 * abs(ayay) ** 2
        - 4 * abs(ax_ay2) ** 2
        - 8 * abs(ax2_ay) ** 2
        + 8 * abs(axcy) ** 2 * ay2
        + 8 * abs(axay) ** 2 * ay2
        - abs(ax_ayay) ** 2
        - abs(cx_ayay) ** 2
        + 16 * ax2 * abs(axcy) ** 2
        - 2 * abs(axax_cy) ** 2
        + 16 * ax2 * abs(axay) ** 2
        + 4 * abs(axax) ** 2 * ay2
        - 2 * abs(axax_ay) ** 2
        + 2 * (
            4 * axay * cxay * ayay.conjugate()
            - 3 * axax_ax2 * axax.conjugate()
            - 2 * ax2_ay * cy_ay2
            - ax2_ayay * ayay.conjugate()
            - 2 * axay * axay_ay2.conjugate()
            - axcy * cxay_ay2
            - 2 * axax * axax_ay2.conjugate()
            - cx_ax2 * ax_ay2       # repaired: printed without the conjugate,
                                    # which breaks joint-phase invariance
            - 4 * axcy * cxay_ax2   # repaired term, see module comment
            - 4 * axay * axay_ax2.conjugate()
            + 8 * axax * axay.conjugate() * cxay
        ).real
    )

    return dict(
        phi1=float(np.real(phi1)),
        phi2=float(np.real(phi2)),
        phi3=float(np.real(phi3)),
        psi1=float(np.real(psi1)),
        psi2=complex(psi2),
        psi3=complex(psi3),
        psi4=float(np.real(psi4)),
        lam1=complex(lam1),
        lam2=complex(lam2),
        lam3=float(np.real(lam3)),
        lam4=complex(lam4),
        lam5=complex(lam5),
        lam6=float(np.real(lam6)),
        xi1=float(np.real(xi1)),
    )


def _xci_rows(Ea, Eb) -> dict:
    ax2 = Ea(1, 1, 0, 0).real
    ay2 = Ea(0, 0, 1, 1).real
    ax4 = Ea(2, 2, 0, 0).real
    ay4 = Ea(0, 0, 2, 2).real
    ax2ay2 = Ea(1, 1, 1, 1).real
    axax = Ea(2, 0, 0, 0)
    ayay = Ea(0, 0, 2, 0)
    axay = Ea(1, 0, 1, 0)
    axcy = Ea(1, 0, 0, 1)
    cxay = Ea(0, 1, 1, 0)

    bx2 = Eb(1, 1, 0, 0).real
    by2 = Eb(0, 0, 1, 1).real
    bx4 = Eb(2, 2, 0, 0).real
    by4 = Eb(0, 0, 2, 2).real
    bx2by2 = Eb(1, 1, 1, 1).real
    bxbx = Eb(2, 0, 0, 0)
    byby = Eb(0, 0, 2, 0)
    bxby = Eb(1, 0, 1, 0)
    bxcy = Eb(1, 0, 0, 1)
    cxby = Eb(0, 1, 1, 0)

    phi4 = (
        4 * ax2 * bx2**2
        + ay2 * bx2 * by2
        + 4 * ax2 * abs(cxby) ** 2
        + ax2 * by2**2
        + 2 * (2 * axcy * bx2 * cxby + axcy * by2 * cxby).real
    )
    phi5 = (
        4 * ax2 * abs(bxby) ** 2
        + ay2 * abs(bxby) ** 2
        + 4 * ax2 * abs(bxbx) ** 2
        + ax2 * abs(byby) ** 2
        + 2 * (2 * axcy * bxbx.conjugate() * bxby
               + axcy * byby * bxby.conjugate()).real
    )
    phi6 = (
        4 * ax2 * bx4
        - 8 * ax2 * bx2**2
        - 4 * ax2 * abs(bxbx) ** 2
        - ay2 * abs(bxcy) ** 2
        - ay2 * abs(bxby) ** 2
        + ax2 * by4
        - 2 * ax2 * by2**2
        - ax2 * abs(byby) ** 2
        - 2 * ax2 * abs(cxby) ** 2
        - 2 * ax2 * abs(bxcy) ** 2
        - 4 * ax2 * abs(bxby) ** 2
        + 4 * ax2 * bx2by2
        + ay2 * bx2by2
        - 4 * ax2 * bx2 * by2
        - ay2 * bx2 * by2
        + 2 * (
            -2 * axcy * bxby * bxbx.conjugate()
            - axcy * byby * bxby.conjugate()
            - 2 * axcy * bx2 * cxby
            - axcy * by2 * cxby
        ).real
    )
    psi5 = (
        4 * bx2 * ax2**2
        + 4 * bx2 * abs(cxay) ** 2
        + by2 * ax2 * ay2
        + bx2 * ay2**2
        + 2 * (2 * bxcy * ax2 * cxay + bxcy * ay2 * cxay).real
    )
    psi6 = (
        4 * bx2 * abs(axax) ** 2
        + 4 * bx2 * abs(axay) ** 2
        + by2 * abs(axay) ** 2
        + bx2 * abs(ayay) ** 2
        + 2 * (2 * bxcy * axax.conjugate() * axay
               + bxcy * ayay * axay.conjugate()).real
    )
    psi7 = (
        4 * bx2 * ax4
        - 8 * bx2 * ax2**2
        - 4 * bx2 * abs(axax) ** 2
        - by2 * abs(axcy) ** 2
        - by2 * abs(axay) ** 2
        + bx2 * ay4
        - 2 * bx2 * ay2**2
        - bx2 * abs(ayay) ** 2
        - 2 * bx2 * abs(cxay) ** 2
        - 2 * bx2 * abs(axcy) ** 2
        - 4 * bx2 * abs(axay) ** 2
        + 4 * bx2 * ax2ay2
        + by2 * ax2ay2
        - 4 * bx2 * ax2 * ay2
        - by2 * ax2 * ay2          # printed weight -4 repaired to -1
        + 2 * (
            -2 * bxcy * axay * axax.conjugate()
            - 2 * bxcy * ax2 * cxay
            - bxcy * ay2 * cxay
            - bxcy * ayay * axay.conjugate()
        ).real
    )
    lam7 = (
        bx2 * ax2**2
        + by2 * ax2 * ay2
        + 2 * (cxby * ax2 * axcy).real
    )
    lam8 = (
        bx2 * ax2**2
        + by2 * abs(cxay) ** 2
        + 2 * (cxby * ax2 * axcy).real
    )
    lam9 = (
        bx2 * ax4
        - 2 * bx2 * ax2**2
        - bx2 * abs(axax) ** 2
        - by2 * abs(axay) ** 2
        - by2 * abs(cxay) ** 2
        + by2 * ax2ay2
        - by2 * ax2 * ay2
        + 2 * (-cxby * axax * axay.conjugate() - cxby * ax2 * axcy).real
    )
    return dict(
        phi4=float(np.real(phi4)),
        phi5=float(np.real(phi5)),
        phi6=float(np.real(phi6)),
        psi5=float(np.real(psi5)),
        psi6=float(np.real(psi6)),
        psi7=float(np.real(psi7)),
        lam7=float(np.real(lam7)),
        lam8=float(np.real(lam8)),
        lam9=float(np.real(lam9)),
    )


def coefficients(m: MomentSet, orientation: str = "x") -> CoefficientSet:
    """All 23 coefficients for one polarization view (b-moments = a-moments)."""
    return xci_coefficients(m, m, orientation)


def xci_coefficients(
    coi: MomentSet, interferer: MomentSet, orientation: str = "x"
) -> CoefficientSet:
    """Coefficients with COI moments in the a-slots and INT moments in the b-slots.

    ``orientation='y'`` swaps the polarization labels in both moment sets.
    """
    if orientation not in ("x", "y"):
        raise ValueError(f"orientation must be 'x' or 'y', got {orientation!r}")
    ma = coi if orientation == "x" else coi.swapped()
    mb = interferer if orientation == "x" else interferer.swapped()
    rows = _sci_rows(ma.m)
    rows.update(_xci_rows(ma.m, mb.m))
    return CoefficientSet(orientation=orientation, **rows)
