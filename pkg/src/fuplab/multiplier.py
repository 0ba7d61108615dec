"""Effective multipliers with compactly supported Fourier transform.

Given a weight ``omega = exp(-Omega)`` on a line grid whose modified Hilbert
transform has small derivative, :func:`build_effective_multiplier` produces a
smaller weight ``omega_tilde`` that is the modulus of a function with Fourier
support in an interval of length ``sigma``. :func:`construct_psi` then
recovers that function through the outer-function formula and measures how
much of it leaks outside the interval.

:func:`adapted_weight` assembles a weight that is small on a regular set, by
placing rescaled copies of a smooth bump on grid covers of the set in dyadic
shells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import ifft

from .hilbert import GridFunction, QuadratureParams, hilbert_derivative, hilbert_modified
from .regular_sets import Interval, MeasuredSet, RegularityError, cover, verify_regularity

__all__ = [
    "Weight",
    "MultiplierResult",
    "PsiResult",
    "AdaptedWeight",
    "PreconditionError",
    "NumericalInconsistency",
    "sawtooth",
    "build_effective_multiplier",
    "construct_psi",
    "fourier_modulus",
    "master_bump",
    "master_bump_derivative",
    "check_hilbert_bound",
    "adapted_weight",
    "bump_decay_constant",
    "sqrt_bracket_weight",
]

MASS_LOWER_CONSTANT = 600000.0


class PreconditionError(ValueError):
    """A numerically verified hypothesis of the construction does not hold."""

    def __init__(self, message, measured=None, limit=None):
        super().__init__(message)
        self.measured = measured
        self.limit = limit


class NumericalInconsistency(RuntimeError):
    """Computed quantities contradict a property that must hold exactly."""


@dataclass(frozen=True, eq=False)
class Weight:
    omega: GridFunction
    big_omega: GridFunction

    def __post_init__(self):
        if not self.omega.same_grid(self.big_omega):
            raise ValueError("omega and big_omega must share a grid")
        if self.omega.is_complex or self.big_omega.is_complex:
            raise ValueError("weights are real")
        big = self.big_omega.values
        if np.any(~np.isfinite(big)):
            raise ValueError("Omega must be finite")
        if np.any(big < -1e-12):
            raise ValueError("weight must satisfy omega <= 1 (Omega >= 0)")

    @classmethod
    def from_big_omega(cls, big: GridFunction) -> "Weight":
        return cls(big.with_values(np.exp(-big.values), flags=()), big)

    @classmethod
    def from_omega(cls, omega: GridFunction) -> "Weight":
        v = omega.values
        if np.any(v <= 0) or np.any(v > 1 + 1e-12):
            raise ValueError("weight values must lie in (0, 1]")
        return cls(omega, omega.with_values(-np.log(v), flags=()))

    @property
    def grid(self) -> GridFunction:
        return self.big_omega

    def power(self, c: float) -> "Weight":
        """The weight ``omega**c``."""
        if c <= 0:
            raise ValueError("exponent must be positive")
        return Weight.from_big_omega(self.big_omega * c)


def sqrt_bracket_weight(lo: float, hi: float, n: int, amplitude: float = 1.0) -> Weight:
    """``omega(x) = exp(-amplitude * <x>^(1/2))`` with ``<x> = (1 + x^2)^(1/2)``."""
    big = GridFunction.from_function(lambda x: amplitude * (1.0 + x * x) ** 0.25, lo, hi, n)
    return Weight.from_big_omega(big)


def sawtooth(sigma: float, x):
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x = np.asarray(x, dtype=float)
    out = np.pi * sigma * x - np.pi * np.floor(sigma * x) - np.pi / 2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class MultiplierResult:
    sigma: float
    T: float
    omega: GridFunction
    omega0: GridFunction
    h_omega0: GridFunction
    s0: GridFunction
    k: GridFunction
    s: GridFunction
    big_m: GridFunction
    m: GridFunction
    omega_tilde: GridFunction
    log_omega_tilde: GridFunction
    branch: str
    hilbert_sup: float
    checks: dict = field(default_factory=dict)

    def window(self) -> tuple:
        return (0.5, 1.0) if self.branch == "right" else (-1.0, -0.5)

    def to_manifest(self) -> dict:
        return {
            "sigma": self.sigma,
            "T": self.T,
            "branch": self.branch,
            "hilbert_sup": self.hilbert_sup,
            "grid": {"x0": self.omega.x0, "dx": self.omega.dx, "n": self.omega.n},
            "checks": self.checks,
        }


def check_hilbert_bound(w: Weight, q: QuadratureParams | None = None) -> float:
    """``sup |(H Omega)'|`` on the grid, computed as ``sup |H0(Omega')|``."""
    big = w.big_omega
    if not np.any(big.values):
        return 0.0
    tail = (q or QuadratureParams()).tail_rule
    return float(np.max(np.abs(hilbert_derivative(big, tail_rule=tail).values)))


def _k_constant(k: np.ndarray, x: np.ndarray, lo: float, hi: float) -> bool:
    """True when ``k`` takes one value on grid nodes with ``lo < x < hi`` (open window)."""
    sel = (x > lo) & (x < hi)
    if not np.any(sel):
        raise ValueError(f"grid has no nodes inside ({lo}, {hi})")
    return bool(np.all(k[sel] == k[sel][0]))


def build_effective_multiplier(w: Weight, sigma: float, *, q: QuadratureParams | None = None,
                               check_precondition: bool = True, slack: float = 1e-9) -> MultiplierResult:
    """Build ``omega_tilde = m * omega0 / 3`` following the sawtooth construction.

    Steps on the grid of ``w``:

    1. ``T = 12/(pi sigma)`` and ``Omega0 = Omega + 3 log(x^2 + T^2)``;
    2. ``s0 = pi sigma x + H(Omega0)``, ``k = floor(s0/pi)``,
       ``s = s0 - pi k - pi/2`` (so ``|s| <= pi/2``);
    3. ``M = H(s)``, ``m = exp(-M)``, ``omega_tilde = m omega0 / 3``.

    ``H`` is :func:`fuplab.hilbert.hilbert_modified`. The sawtooth ``s`` is
    transformed with truncation beyond the grid since it has no decaying tail.
    The branch is the window ``(0, 2)`` or ``(-2, 0)`` on which ``k`` is
    constant (the right one when both are). Endpoints are excluded because a
    jump of ``k`` may sit exactly at ``x = 0``.

    Raises
    ------
    PreconditionError
        ``sup |(H Omega)'| > (pi/2) sigma`` (skipped when ``check_precondition``
        is false).
    NumericalInconsistency
        ``k`` is not monotone, is constant on neither window, or one of the
        bounds ``0 <= omega_tilde <= omega`` and
        ``omega_tilde >= sigma^6/600000 * omega`` on the half window fails.
    """
    if not 0 < sigma < 0.1:
        raise ValueError("sigma must lie in (0, 1/10)")
    q = q or QuadratureParams()
    grid = w.big_omega
    x = grid.x
    if x[0] > -2 or x[-1] < 2:
        raise ValueError("grid must contain [-2, 2]")

    sup = check_hilbert_bound(w, q)
    limit = 0.5 * np.pi * sigma
    if check_precondition and sup > limit:
        raise PreconditionError(
            f"sup |(H Omega)'| = {sup:.6g} exceeds (pi/2) sigma = {limit:.6g}", measured=sup, limit=limit)

    T = 12.0 / (np.pi * sigma)
    log_w0 = -(grid.values + 3.0 * np.log(x * x + T * T))
    omega0 = grid.with_values(np.exp(log_w0), flags=())
    h0 = hilbert_modified(grid.with_values(-log_w0, flags=()), q)
    s0 = np.pi * sigma * x + h0.values
    k = np.floor(s0 / np.pi)
    s = s0 - np.pi * k - np.pi / 2
    if np.any(np.diff(k) < 0):
        raise NumericalInconsistency("k is not monotone nondecreasing on the grid")

    big_m = hilbert_modified(grid.with_values(s, flags=()), QuadratureParams(q.pv_exclusion, "truncate"))
    log_wt = -big_m.values + log_w0 - math.log(3.0)
    wt = np.exp(log_wt)

    right = _k_constant(k, x, 0.0, 2.0)
    left = _k_constant(k, x, -2.0, 0.0)
    if not (right or left):
        raise NumericalInconsistency("k is constant on neither (0, 2) nor (-2, 0)")
    branch = "right" if right else "left"

    omega = w.omega.values
    upper_gap = float(np.max(wt - omega))
    lo, hi = (0.5, 1.0) if branch == "right" else (-1.0, -0.5)
    win = (x > lo) & (x < hi)
    # compare in logs: the lower bound is tiny relative to omega
    lower_margin = float(np.min(log_wt[win] + grid.values[win])) - math.log(sigma ** 6 / MASS_LOWER_CONSTANT)
    checks = {
        "max_omega_tilde_minus_omega": upper_gap,
        "min_omega_tilde": float(np.min(wt)),
        "log_lower_margin": lower_margin,
        "window_m_range": [float(np.min(big_m.values[win])), float(np.max(big_m.values[win]))],
        "s_sup": float(np.max(np.abs(s))),
    }
    if upper_gap > slack or np.min(wt) < 0:
        raise NumericalInconsistency(f"omega_tilde exceeds omega by {upper_gap:.3g}")
    if lower_margin < 0:
        raise NumericalInconsistency(
            f"omega_tilde falls below sigma^6/600000 * omega on the window (log margin {lower_margin:.4g})")

    def g(v):
        return grid.with_values(v, flags=())

    return MultiplierResult(
        sigma=float(sigma), T=T, omega=w.omega, omega0=omega0, h_omega0=h0, s0=g(s0), k=g(k), s=g(s),
        big_m=big_m, m=g(np.exp(-big_m.values)), omega_tilde=g(wt), log_omega_tilde=g(log_wt),
        branch=branch, hilbert_sup=sup, checks=checks)


@dataclass(frozen=True, eq=False)
class PsiResult:
    psi: GridFunction
    support_leakage: float
    support: tuple
    outer: GridFunction
    h_big_omega_tilde: GridFunction


def construct_psi(r: MultiplierResult, *, shift: str = "support", q: QuadratureParams | None = None) -> PsiResult:
    """Recover the Fourier-side function whose transform has modulus ``omega_tilde``.

    The outer function ``f = exp(-(W + i H W))`` with ``W = -log omega_tilde``
    is formed on the grid; ``H W`` is assembled by linearity from the already
    computed ``H(Omega0)`` and ``H(M - c)``, where ``c`` is the limit of ``M``
    off the grid (constants such as ``log 3`` and ``c`` transform to zero). ``psi(xi) = int exp(2 pi i x xi) f(x) dx`` is then evaluated by FFT
    and translated so that its support becomes ``[0, sigma]``
    (``shift="support"``), ``[-sigma/2, sigma/2]`` (``"center"``), or is left
    untranslated (``"none"``, support ``[-sigma, 0]``).

    ``support_leakage`` is the l2 mass of ``psi`` outside the support interval
    relative to its total l2 mass, on the dual grid of spacing ``1/(n dx)``.
    """
    if shift not in ("support", "center", "none"):
        raise ValueError(f"unknown shift {shift!r}")
    q = q or QuadratureParams()
    W = -r.log_omega_tilde.values
    if not np.all(np.isfinite(W)):
        raise ValueError("omega_tilde vanishes on the grid; its logarithm is undefined")
    grid = r.omega_tilde
    x = grid.x
    # M = H(s) tends to the constant c_inf = (1/pi) int s t/(t^2+1) dt away from
    # the grid. Subtracting it leaves a decaying function, and H(c_inf) = 0.
    c_inf = float(np.sum(r.s.values * x / (x * x + 1.0)) * grid.dx / np.pi)
    hm = hilbert_modified(r.big_m - c_inf, QuadratureParams(q.pv_exclusion, "truncate"))
    hw = hm.values + r.h_omega0.values
    f = np.exp(-W - 1j * hw)

    n, dx, x0 = grid.n, grid.dx, grid.x0
    dy = 1.0 / (n * dx)
    y0 = -(n // 2) * dy
    m = np.arange(n) - n // 2
    # sum_j f_j exp(2 pi i (x0 + j dx) y_m) dx with y_m = m dy
    z = ifft(f) * n
    z = np.roll(z, n // 2)
    psi_vals = dx * np.exp(2j * np.pi * x0 * m * dy) * z

    offset = {"support": r.sigma, "center": 0.5 * r.sigma, "none": 0.0}[shift]
    lo, hi = -r.sigma + offset, offset
    psi = GridFunction(y0 + offset, dy, psi_vals)
    y = psi.x
    inside = (y >= lo - 0.5 * dy) & (y <= hi + 0.5 * dy)
    total = float(np.sum(np.abs(psi_vals) ** 2))
    outside = float(np.sum(np.abs(psi_vals[~inside]) ** 2))
    leak = math.sqrt(outside / total) if total > 0 else 0.0
    return PsiResult(psi=psi, support_leakage=leak, support=(lo, hi), outer=grid.with_values(f, flags=()),
                     h_big_omega_tilde=grid.with_values(hw, flags=()))


def fourier_modulus(psi: GridFunction, x: np.ndarray, *, support: tuple | None = None) -> np.ndarray:
    """``|int exp(-2 pi i x y) psi(y) dy|`` at the points ``x`` (direct sum).

    Restricting to ``support`` (a pair ``lo, hi``) drops the leaked part.
    """
    y, v = psi.x, psi.values
    if support is not None:
        keep = (y >= support[0] - 0.5 * psi.dx) & (y <= support[1] + 0.5 * psi.dx)
        y, v = y[keep], v[keep]
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for c in range(0, x.size, 4096):
        ph = np.exp(-2j * np.pi * np.outer(x[c:c + 4096], y))
        out[c:c + 4096] = np.abs(ph @ v) * psi.dx
    return out


# ---------------------------------------------------------------------------
# bumps and adapted weights

def master_bump(x):
    """Even bump equal to 1 on ``[-1/2, 1/2]``, 0 outside ``(-1, 1)``, quintic ramps between."""
    x = np.abs(np.asarray(x, dtype=float))
    t = np.clip(2.0 * (1.0 - x), 0.0, 1.0)
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def master_bump_derivative(x):
    x = np.asarray(x, dtype=float)
    t = np.clip(2.0 * (1.0 - np.abs(x)), 0.0, 1.0)
    dt = 30.0 * t * t * (1.0 - t) ** 2
    return -2.0 * np.sign(x) * dt


def bump_decay_constant(length: float = 1.0, *, center: float = 0.0, half_width_cells: int = 2 ** 14,
                        extent: float = 64.0) -> float:
    """Measured ``K = sup (1 + u^2) |H0(chi_J')(xi_J + |J| u)|`` for the rescaled bump.

    The grid is ``xi_J + |J| * [-extent, extent]`` with ``2*half_width_cells``
    samples, so the computation is dilation covariant by construction.
    """
    n = 2 * half_width_cells
    lo = center - extent * length
    dx = 2 * extent * length / n
    xi = lo + dx * np.arange(n)
    u = (xi - center) / length
    deriv = GridFunction(lo, dx, master_bump_derivative(u))
    from .hilbert import hilbert_fft
    h = hilbert_fft(deriv, tail_rule="truncate").values
    return float(np.max((1.0 + u * u) * np.abs(h)))


@dataclass(frozen=True, eq=False)
class AdaptedWeight:
    weight: Weight
    covers: list
    n1: int
    c1: float
    cutoff_profile: GridFunction
    hilbert_sup: float
    bound: float
    counts: list

    @property
    def bound_ok(self) -> bool:
        return self.hilbert_sup <= self.bound

    def multiplier_exponent(self) -> float:
        """Exponent ``c`` making ``sup |(H(c Omega))'| <= (pi/2) (c1/10)``."""
        if self.hilbert_sup == 0:
            return 1.0
        return min(1.0, 0.5 * np.pi * (self.c1 / 10.0) / self.hilbert_sup)

    def to_manifest(self) -> dict:
        return {
            "n1": self.n1,
            "c1": self.c1,
            "hilbert_sup": self.hilbert_sup,
            "bound": self.bound,
            "counts": self.counts,
            "rho": [rho for rho, _ in self.covers],
        }


def adapted_weight(y: MeasuredSet, delta: float, cr: float, c1: float, k_user: float, *,
                   n_points: int = 2 ** 17, extent: float | None = None, verify: bool = True,
                   q: QuadratureParams | None = None) -> AdaptedWeight:
    """Weight ``exp(-<xi>^(1/2)) * prod_J exp(-10 chi_J)`` adapted to ``y``.

    For each shell ``A_n = [-2^(n+1), -2^n] u [2^n, 2^(n+1)]`` with
    ``1 <= n <= n1 = ceil(log2 alpha1)`` (``alpha1`` the largest ``|xi|`` in
    the support), the two halves of ``y ∩ A_n`` are covered by grid cells of
    length ``rho_n = n^(-(1+delta)/2) 2^n``. Every cell ``J`` contributes the
    bump ``chi_J(xi) = |J| chi((xi - xi_J)/|J|)``. When ``verify`` is set the
    set is first checked for regularity with ``(delta, cr)`` on scales
    ``[2, alpha1]``.

    The result reports ``sup |(H Omega)'|`` next to the reference value
    ``k_user * cr^2 / (delta (1 - delta))``.
    """
    if not 0 < c1 < 1:
        raise ValueError("c1 must lie in (0, 1)")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    hull = y.support.hull
    alpha1 = max(abs(hull.lo), abs(hull.hi))
    n1 = max(1, math.ceil(math.log2(alpha1))) if alpha1 > 1 else 0
    if verify and alpha1 > 2:
        rep = verify_regularity(y, delta, cr, 2.0, alpha1)
        if not rep.passed:
            raise RegularityError(
                f"set is not regular with constant {cr} on [2, {alpha1:g}] (estimate {rep.cr_estimate:.4g})")

    covers, counts, bumps = [], [], []
    for n in range(1, n1 + 1):
        rho = n ** (-(1 + delta) / 2) * 2.0 ** n
        cells = []
        for region in (Interval(-2.0 ** (n + 1), -2.0 ** n), Interval(2.0 ** n, 2.0 ** (n + 1))):
            cells.extend(cover(y, region, rho, delta, cr, check=False))
        cells = sorted(set(cells))
        limit = 24 * cr ** 2 * n ** (delta * (1 + delta) / 2)
        if len(cells) > limit:
            raise RegularityError(f"shell {n}: {len(cells)} cover cells exceed {limit:.6g}",
                                  count=len(cells), bound=limit)
        covers.append((rho, cells))
        counts.append(len(cells))
        bumps.extend((iv.center, iv.length) for iv in cells)

    if extent is None:
        extent = max(64.0, 16.0 * 2.0 ** (n1 + 1))
    dx = 2 * extent / n_points
    xi = -extent + dx * np.arange(n_points)
    big = (1.0 + xi * xi) ** 0.25
    for c, length in bumps:
        u = (xi - c) / length
        near = np.abs(u) < 1
        big[near] += 10.0 * length * master_bump(u[near])
    big_gf = GridFunction(-extent, dx, big)
    w = Weight.from_big_omega(big_gf)
    sup = check_hilbert_bound(w, q)
    bound = k_user * cr ** 2 / (delta * (1 - delta))
    profile = GridFunction.from_function(master_bump, -1.5, 1.5, 3001)
    return AdaptedWeight(weight=w, covers=covers, n1=n1, c1=float(c1), cutoff_profile=profile,
                         hilbert_sup=sup, bound=bound, counts=counts)
