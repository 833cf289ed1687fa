"""Singular panel integrals for the 2D single-layer operators.

Laplace kernel ``G(z) = -log|z| / 2pi``:

* collinear panel pairs (including coincident and adjacent ones) use the
  closed form built from the second antiderivative of ``log``,
* all other pairs integrate the analytic single-panel potential with an
  adaptive Gauss rule on the outer panel.

Helmholtz kernel ``G_k(z) = (i/4) H0^(1)(k|z|)``: split as ``G + R_k`` where
the remainder ``R_k = G_k - G`` is continuous at 0 (the log parts cancel),
so the log machinery carries the singularity and the remainder only needs
smooth quadrature.

For meshes on a single straight edge, every pairwise integral is a
difference-kernel integral in arc length; ``LineKernelTables`` precomputes
piecewise-Chebyshev antiderivatives of the remainder so whole matrices come
from pointwise table lookups.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .hankel import EULER_GAMMA, hankel_h0

TWO_PI = 2.0 * np.pi
GAUSS16_NODES, GAUSS16_WEIGHTS = np.polynomial.legendre.leggauss(16)
_TENSOR_NODES, _TENSOR_WEIGHTS = np.polynomial.legendre.leggauss(10)

TOL_MIN, TOL_MAX = 1e-14, 1e-6
DEFAULT_TOL = 1e-12


def _check_tol(tol: float):
    if not (TOL_MIN <= tol <= TOL_MAX) and tol != DEFAULT_TOL:
        raise ValueError(f"tol must lie in [{TOL_MIN}, {TOL_MAX}], got {tol}")


@dataclass(frozen=True)
class Segment:
    """Straight integration panel with two endpoints in the plane."""

    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=float))
        object.__setattr__(self, "p1", np.asarray(self.p1, dtype=float))
        if self.length <= 0.0:
            raise ValueError("degenerate segment (zero length)")

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.p1 - self.p0)))

    @property
    def direction(self) -> np.ndarray:
        return (self.p1 - self.p0) / self.length


@dataclass(frozen=True)
class Wavenumber:
    """Positive wavenumber of the Helmholtz kernel."""

    value: float

    def __post_init__(self):
        if not self.value > 0.0:
            raise ValueError("wavenumber must be positive")


def _as_kappa(kappa) -> float:
    return kappa.value if isinstance(kappa, Wavenumber) else float(kappa)


# ----------------------------------------------------------------------
# closed forms for the log kernel
# ----------------------------------------------------------------------
def log_antider2(z):
    """Even second antiderivative of log|z| with value and slope 0 at 0."""
    z = np.abs(np.asarray(z, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 0.25 * z * z * (2.0 * np.log(z) - 3.0)
    return np.where(z > 0.0, out, 0.0)


def log_antider4(z):
    """Even fourth antiderivative of log|z| (value and derivatives 0 at 0)."""
    z = np.abs(np.asarray(z, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = z**4 * (12.0 * np.log(z) - 25.0) / 288.0
    return np.where(z > 0.0, out, 0.0)


def collinear_log_block(ta: np.ndarray, tb: np.ndarray) -> np.ndarray:
    """Integrals of log|t-s| over interval pairs on one line.

    ``ta`` (n+1,) and ``tb`` (m+1,) are interval breakpoints; the result has
    shape (n, m) with entry (i, j) the double integral over
    ``[ta_i, ta_{i+1}] x [tb_j, tb_{j+1}]``.  Works for any overlap pattern.
    """
    P = log_antider2(np.subtract.outer(ta, tb))
    return P[:-1, 1:] + P[1:, :-1] - P[1:, 1:] - P[:-1, :-1]


def segment_potential_log(points: np.ndarray, b0, b1) -> np.ndarray:
    """``int_b log|x - y| dy`` for each row of ``points``.

    Analytic for any point location, including points on the panel itself
    (the half-line primitive ``u log|u| - u`` extends continuously).
    """
    b0 = np.asarray(b0, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    h = float(np.hypot(*(b1 - b0)))
    d = (b1 - b0) / h
    rel = points - b0
    s0 = rel @ d
    perp = rel - s0[..., None] * d
    rho = np.hypot(perp[..., 0], perp[..., 1])

    def F(u):
        w = u * u + rho * rho
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(w > 0.0, u * np.log(w), 0.0)
            t2 = np.where(rho > 0.0, rho * np.arctan2(u, rho), 0.0)
        return 0.5 * t1 - u + t2

    return F(h - s0) - F(-s0)


def _collinear_1d(a: Segment, b: Segment):
    """Map two segments on a common line to 1D intervals, or return None."""
    d = a.direction
    e = b.direction
    scale = max(a.length, b.length)
    cross_dir = d[0] * e[1] - d[1] * e[0]
    off = b.p0 - a.p0
    cross_off = off[0] * d[1] - off[1] * d[0]
    if abs(cross_dir) > 1e-12 or abs(cross_off) > 1e-12 * scale:
        return None
    A, B = 0.0, a.length
    C = float(off @ d)
    D = float((b.p1 - a.p0) @ d)
    if D < C:
        C, D = D, C
    return A, B, C, D


def _gauss_panel(f, lo: float, hi: float):
    half = 0.5 * (hi - lo)
    pts = 0.5 * (lo + hi) + half * GAUSS16_NODES
    return half * float(np.dot(GAUSS16_WEIGHTS, f(pts)))


def _adaptive_panel_integral(f, lo: float, hi: float, abs_tol: float) -> float:
    """Adaptive Gauss(16) with recursive bisection and proportional budgets."""
    total_len = hi - lo
    stack = [(lo, hi, _gauss_panel(f, lo, hi))]
    acc = 0.0
    while stack:
        x0, x1, whole = stack.pop()
        mid = 0.5 * (x0 + x1)
        left = _gauss_panel(f, x0, mid)
        right = _gauss_panel(f, mid, x1)
        budget = abs_tol * (x1 - x0) / total_len
        if abs(left + right - whole) <= budget or (x1 - x0) <= total_len * 2.0**-50:
            acc += left + right
        else:
            stack.append((x0, mid, left))
            stack.append((mid, x1, right))
    return acc


def slp_entry_laplace(a: Segment, b: Segment, tol: float = DEFAULT_TOL) -> float:
    """Galerkin entry ``int_a int_b G(x - y) dy dx`` of the log kernel.

    Collinear pairs (coincident and adjacent ones in particular) are exact
    closed forms; other pairs combine the analytic inner potential with an
    adaptive outer Gauss rule driven to relative accuracy ``tol``.
    """
    _check_tol(tol)
    col = _collinear_1d(a, b)
    if col is not None:
        A, B, C, D = col
        P = log_antider2
        val = P(D - A) + P(C - B) - P(D - B) - P(C - A)
        return -val / TWO_PI

    def outer(ts):
        pts = a.p0 + ts[:, None] * a.direction
        return segment_potential_log(pts, b.p0, b.p1)

    rough = _gauss_panel(outer, 0.0, a.length)
    floor = a.length * b.length * 1e-3
    abs_tol = tol * max(abs(rough), floor)
    return -_adaptive_panel_integral(outer, 0.0, a.length, abs_tol) / TWO_PI


# ----------------------------------------------------------------------
# Helmholtz kernel: smooth remainder
# ----------------------------------------------------------------------
def helmholtz_remainder_at_zero(kappa) -> complex:
    """Limit of ``G_k - G`` at zero separation (the log parts cancel)."""
    k = _as_kappa(kappa)
    return (np.log(2.0 / k) - EULER_GAMMA) / TWO_PI + 0.25j


def helmholtz_remainder(r, kappa):
    """``G_k(r) - G(r)`` for separations ``r >= 0`` (continuous at 0)."""
    k = _as_kappa(kappa)
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.empty(r.shape, dtype=complex)
    zero = r <= 0.0
    out[zero] = helmholtz_remainder_at_zero(k)
    rp = r[~zero]
    out[~zero] = 0.25j * hankel_h0(k * rp) + np.log(rp) / TWO_PI
    return out[0] if scalar else out


def _tensor_cell(f2d, sa0, sa1, sb0, sb1):
    ha = 0.5 * (sa1 - sa0)
    hb = 0.5 * (sb1 - sb0)
    s = 0.5 * (sa0 + sa1) + ha * _TENSOR_NODES
    t = 0.5 * (sb0 + sb1) + hb * _TENSOR_NODES
    vals = f2d(s[:, None], t[None, :])
    return ha * hb * complex(_TENSOR_WEIGHTS @ vals @ _TENSOR_WEIGHTS)


def _adaptive_tensor_integral(f2d, la: float, lb: float, abs_tol: float) -> complex:
    """Quadtree-adaptive tensor Gauss rule on ``[0, la] x [0, lb]``."""
    area = la * lb
    stack = [(0.0, la, 0.0, lb, _tensor_cell(f2d, 0.0, la, 0.0, lb))]
    acc = 0.0 + 0.0j
    while stack:
        a0, a1, b0, b1, whole = stack.pop()
        am, bm = 0.5 * (a0 + a1), 0.5 * (b0 + b1)
        quads = [
            (a0, am, b0, bm),
            (am, a1, b0, bm),
            (a0, am, bm, b1),
            (am, a1, bm, b1),
        ]
        parts = [_tensor_cell(f2d, *q) for q in quads]
        budget = abs_tol * (a1 - a0) * (b1 - b0) / area
        small = (a1 - a0) <= la * 2.0**-40
        if abs(sum(parts) - whole) <= budget or small:
            acc += sum(parts)
        else:
            stack.extend((q[0], q[1], q[2], q[3], p) for q, p in zip(quads, parts))
    return acc


def slp_entry_helmholtz(
    a: Segment, b: Segment, kappa, tol: float = DEFAULT_TOL
) -> complex:
    """Galerkin entry of the Helmholtz single-layer kernel.

    Computed as the Laplace entry plus the double integral of the smooth
    remainder (adaptive tensor quadrature).
    """
    _check_tol(tol)
    k = _as_kappa(kappa)
    lap = slp_entry_laplace(a, b, tol)

    da, db = a.direction, b.direction

    def f2d(s, t):
        x = a.p0[None, None, :] + s[..., None] * da
        y = b.p0[None, None, :] + t[..., None] * db
        r = np.hypot(*(x - y).transpose(2, 0, 1))
        return helmholtz_remainder(r, k)

    scale = abs(helmholtz_remainder_at_zero(k)) * a.length * b.length
    rem = _adaptive_tensor_integral(f2d, a.length, b.length, tol * scale)
    return lap + rem


# ----------------------------------------------------------------------
# flat-line kernel tables (fast assembly on a single straight edge)
# ----------------------------------------------------------------------
_PANEL_DEG = 24
_N_PANELS = 66  # dyadic panels down to total_length * 2**-66


def _interp_panel(func, lo: float, hi: float, deg: int = _PANEL_DEG):
    """Chebyshev coefficients of ``func`` on [lo, hi] (complex supported)."""
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    re = _cheb.chebinterpolate(lambda xi: np.real(func(c + h * xi)), deg)
    im = _cheb.chebinterpolate(lambda xi: np.imag(func(c + h * xi)), deg)
    return re + 1j * im


class LineKernelTables:
    """Antiderivative tables of the Helmholtz remainder along one line.

    For points on one straight edge the kernel depends only on the
    arc-length separation ``z``; a double integral of piecewise-constant
    (piecewise-linear) densities reduces to combinations of the second
    (fourth) even antiderivative of the kernel at breakpoint separations.
    The log part has closed forms; this table interpolates the remainder's
    antiderivatives on dyadic panels so whole-matrix assembly is vectorized.
    """

    def __init__(self, kappa, total_length: float):
        self.kappa = _as_kappa(kappa)
        self.length = float(total_length)
        self.c0 = helmholtz_remainder_at_zero(self.kappa)

        L = self.length
        edges = [L * 2.0 ** (-k) for k in range(_N_PANELS, -1, -1)]
        self._z_tiny = edges[0]
        self._panels = []  # (lo, hi, m0, m1, n0, n1) chebyshev coefficient rows

        z0 = edges[0]
        M0 = self.c0 * z0
        M1 = self.c0 * z0**2 / 2.0
        N0 = self.c0 * z0**3 / 6.0
        N1 = self.c0 * z0**4 / 8.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            h = 0.5 * (hi - lo)
            cR = _interp_panel(lambda u: helmholtz_remainder(u, self.kappa), lo, hi)
            cuR = _interp_panel(
                lambda u: u * helmholtz_remainder(u, self.kappa), lo, hi
            )
            m0 = h * _cheb.chebint(cR, lbnd=-1.0)
            m0[0] += M0
            m1 = h * _cheb.chebint(cuR, lbnd=-1.0)
            m1[0] += M1

            def k2_local(u, _m0=m0, _m1=m1, _lo=lo, _hi=hi):
                xi = (2.0 * u - (_lo + _hi)) / (_hi - _lo)
                return u * _cheb.chebval(xi, _m0) - _cheb.chebval(xi, _m1)

            cK2 = _interp_panel(k2_local, lo, hi)
            cuK2 = _interp_panel(lambda u: u * k2_local(u), lo, hi)
            n0 = h * _cheb.chebint(cK2, lbnd=-1.0)
            n0[0] += N0
            n1 = h * _cheb.chebint(cuK2, lbnd=-1.0)
            n1[0] += N1

            self._panels.append((lo, hi, m0, m1, n0, n1))
            M0 = _cheb.chebval(1.0, m0)
            M1 = _cheb.chebval(1.0, m1)
            N0 = _cheb.chebval(1.0, n0)
            N1 = _cheb.chebval(1.0, n1)

        self._lo = np.array([p[0] for p in self._panels])

    def _eval(self, z: np.ndarray, which: str) -> np.ndarray:
        z = np.abs(np.asarray(z, dtype=float))
        out = np.zeros(z.shape, dtype=complex)
        tiny = z <= self._z_tiny
        if which == "k2":
            out[tiny] = self.c0 * z[tiny] ** 2 / 2.0
        else:
            out[tiny] = self.c0 * z[tiny] ** 4 / 24.0
        rest = ~tiny
        if not rest.any():
            return out
        zr = z[rest]
        idx = np.searchsorted(self._lo, zr, side="right") - 1
        idx = np.clip(idx, 0, len(self._panels) - 1)
        vals = np.empty(zr.shape, dtype=complex)
        for k in np.unique(idx):
            m = idx == k
            lo, hi, m0, m1, n0, n1 = self._panels[k]
            xi = (2.0 * zr[m] - (lo + hi)) / (hi - lo)
            if which == "k2":
                vals[m] = zr[m] * _cheb.chebval(xi, m0) - _cheb.chebval(xi, m1)
            else:
                vals[m] = zr[m] * _cheb.chebval(xi, n0) - _cheb.chebval(xi, n1)
        out[rest] = vals
        return out

    def k2(self, z):
        """Even second antiderivative of the remainder (0 value/slope at 0)."""
        return self._eval(z, "k2")

    def k4(self, z):
        """Even fourth antiderivative of the remainder."""
        return self._eval(z, "k4")

    def remainder_block(self, ta: np.ndarray, tb: np.ndarray) -> np.ndarray:
        """Pairwise remainder double integrals over interval families."""
        P = self.k2(np.subtract.outer(ta, tb))
        return P[:-1, 1:] + P[1:, :-1] - P[1:, 1:] - P[:-1, :-1]
