"""Discrete uncertainty norms on Z_N and an FIO-type kernel on the circle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import fft, ifft
from scipy.linalg import svdvals

from .krylov import ConvergenceError, power_iteration
from .regular_sets import CantorSpec, DiscreteSet, Interval, IntervalSet, cantor_digit_indices, thicken

__all__ = [
    "DiscreteSet",
    "NormResult",
    "FitResult",
    "ScalingExperiment",
    "ConvergenceError",
    "DENSE_THRESHOLD",
    "dft_apply",
    "dft_matrix",
    "fup_norm",
    "cantor_discrete",
    "ucp_constant",
    "fit_power_law",
    "scaling_experiment",
    "fio_norm",
    "fio_matrix",
]

DENSE_THRESHOLD = 4096


@dataclass(frozen=True)
class NormResult:
    value: float
    method: str
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True

    def to_row(self, n=None, nx=None, ny=None) -> dict:
        return {"N": n, "X": nx, "Y": ny, "norm": self.value, "method": self.method,
                "iterations": self.iterations, "residual": self.residual}


def dft_apply(n: int, v) -> np.ndarray:
    """Unitary DFT ``(1/sqrt n) sum_l exp(-2 pi i j l / n) v_l`` by FFT."""
    v = np.asarray(v)
    if v.shape[0] != n:
        raise ValueError(f"vector length {v.shape[0]} does not match n={n}")
    return fft(v, axis=0, norm="ortho")


def dft_matrix(n: int, rows=None, cols=None) -> np.ndarray:
    """Rows/columns of the unitary DFT matrix with phases reduced mod n exactly."""
    r = np.arange(n) if rows is None else np.asarray(rows, dtype=np.int64)
    c = np.arange(n) if cols is None else np.asarray(cols, dtype=np.int64)
    phase = np.outer(r, c) % n
    return np.exp(-2j * np.pi * phase / n) / math.sqrt(n)


def cantor_discrete(M: int, alphabet, k: int) -> DiscreteSet:
    spec = CantorSpec(M, tuple(alphabet), k)
    if k < 1:
        raise ValueError("depth must be >= 1")
    return DiscreteSet(spec.base ** spec.depth, cantor_digit_indices(spec.base, spec.alphabet, spec.depth))


def fup_norm(x: DiscreteSet, y: DiscreteSet, *, method: str = "auto", dense_threshold: int = DENSE_THRESHOLD,
             tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0) -> NormResult:
    """Operator norm of ``1_X F_N 1_Y``.

    ``method="auto"`` uses a dense SVD of the ``|X| x |Y|`` block when
    ``N <= dense_threshold`` and otherwise the power method on
    ``v -> 1_Y F* 1_X F 1_Y v``. For the power method ``residual`` is the
    certificate ``|A v| - <v, A v>`` at termination.
    """
    if x.n != y.n:
        raise ValueError("sets live in different Z_N")
    n = x.n
    if len(x) == 0 or len(y) == 0:
        return NormResult(0.0, "dense_svd")
    if method == "auto":
        method = "dense_svd" if n <= dense_threshold else "power_iteration"
    if method == "dense_svd":
        if len(x) * len(y) > DENSE_THRESHOLD ** 2:
            raise ValueError("dense SVD block larger than 4096 x 4096; use power_iteration")
        s = svdvals(dft_matrix(n, x.indices, y.indices))
        return NormResult(float(s[0]), "dense_svd")
    if method != "power_iteration":
        raise ValueError(f"unknown method {method!r}")
    xm, yidx = x.mask, y.indices

    def op(v):
        full = np.zeros(n, dtype=complex)
        full[yidx] = v
        g = fft(full, norm="ortho")
        g[~xm] = 0.0
        return ifft(g, norm="ortho")[yidx]

    res = power_iteration(op, len(y), tol=tol, max_iter=max_iter, seed=seed)
    return NormResult(math.sqrt(max(res.eigenvalue, 0.0)), "power_iteration", res.iterations, res.certificate)


def ucp_constant(y: DiscreteSet, u: DiscreteSet, *, dense_threshold: int = DENSE_THRESHOLD) -> NormResult:
    """Smallest singular value of the inverse DFT block with rows ``u`` and columns ``y``.

    This is ``min |f|_u| / |f|`` over ``f`` with DFT supported in ``y``. When
    ``|u| < |y|`` the block has a kernel and the constant is 0.
    """
    if y.n != u.n:
        raise ValueError("sets live in different Z_N")
    if y.n > dense_threshold:
        raise ValueError(f"unique continuation constant needs n <= {dense_threshold} (dense only)")
    if len(y) == 0:
        raise ValueError("y must be nonempty")
    if len(u) < len(y):
        return NormResult(0.0, "dense_svd")
    block = dft_matrix(y.n, u.indices, y.indices).conj()
    s = svdvals(block)
    return NormResult(float(s[-1]), "dense_svd")


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    max_abs_residual: float
    residuals: tuple = ()


def fit_power_law(N, values) -> FitResult:
    """Least squares fit ``log value = intercept - slope * log N``."""
    ln = np.log(np.asarray(N, dtype=float))
    lv = np.log(np.asarray(values, dtype=float))
    A = np.column_stack([np.ones_like(ln), ln])
    coef, *_ = np.linalg.lstsq(A, lv, rcond=None)
    res = lv - A @ coef
    return FitResult(slope=float(-coef[1]), intercept=float(coef[0]),
                     max_abs_residual=float(np.max(np.abs(res))), residuals=tuple(res.tolist()))


@dataclass(frozen=True)
class ScalingExperiment:
    family: CantorSpec
    depths: tuple
    norms: tuple
    fit: FitResult

    @property
    def beta_emp(self) -> float:
        return self.fit.slope

    def rows(self) -> list:
        M = self.family.base
        return [{"depth": k, "N": M ** k, "norm": r.value, "log_norm": math.log(r.value) if r.value > 0 else -math.inf,
                 "method": r.method, "iterations": r.iterations, "residual": r.residual}
                for k, r in zip(self.depths, self.norms)]


def scaling_experiment(M: int, alphabet, k_min: int, k_max: int, *, method: str = "auto",
                       tol: float = 1e-10, seed: int = 0) -> ScalingExperiment:
    """Norms ``|1_X F 1_X|`` for the depth-k Cantor sets ``X`` and their decay rate in ``N = M^k``."""
    if k_min < 1 or k_max < k_min + 2:
        raise ValueError("need k_min >= 1 and k_max >= k_min + 2")
    spec = CantorSpec(M, tuple(alphabet), k_max)
    depths = tuple(range(k_min, k_max + 1))
    norms = []
    for k in depths:
        x = cantor_discrete(M, spec.alphabet, k)
        norms.append(fup_norm(x, x, method=method, tol=tol, seed=seed))
    fit = fit_power_law([M ** k for k in depths], [r.value for r in norms])
    d = spec.dimension
    if 0 < d < 1 and not fit.slope > 0:
        raise ArithmeticError(f"fitted exponent {fit.slope:.4g} is not positive for dimension {d:.4g}")
    return ScalingExperiment(family=spec, depths=depths, norms=tuple(norms), fit=fit)


# ---------------------------------------------------------------------------
# circle kernel

def _band_cutoff(d, band):
    """0 for chord ``d <= band``, 1 for ``d >= 2 band``, smooth in between."""
    t = np.clip((d - band) / band, 0.0, 1.0)
    return t ** 3 * (10 - 15 * t + 6 * t * t)


def _circle_membership(theta, s: IntervalSet):
    two_pi = 2 * np.pi
    return s.contains(theta) | s.contains(theta + two_pi) | s.contains(theta - two_pi)


def fio_matrix(h: float, n: int, rows=None, cols=None, *, cutoff="band", band: float = 0.1) -> np.ndarray:
    """Trapezoid discretisation of ``(2 pi h)^(-1/2) |y - y'|^(2i/h) chi(y, y')`` on ``n`` circle nodes."""
    r = np.arange(n) if rows is None else np.asarray(rows)
    c = np.arange(n) if cols is None else np.asarray(cols)
    th = 2 * np.pi * np.arange(n) / n
    diff = th[r][:, None] - th[c][None, :]
    d = 2.0 * np.abs(np.sin(diff / 2))
    if cutoff == "band":
        chi = _band_cutoff(d, band)
    elif callable(cutoff):
        chi = cutoff(d)
    elif cutoff in (0, "zero", None):
        chi = np.zeros_like(d)
    else:
        raise ValueError(f"unknown cutoff {cutoff!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        phase = np.where(d > 0, np.exp(2j * np.log(np.where(d > 0, d, 1.0)) / h), 0.0)
    return (2 * np.pi * h) ** -0.5 * phase * chi * (2 * np.pi / n)


def fio_norm(h: float, rho: float, base_set: IntervalSet, cutoff="band", *, n_points: int | None = None,
             band: float = 0.1) -> NormResult:
    """Norm of the circle kernel restricted on both sides to ``base_set + [-h^rho, h^rho]``.

    ``base_set`` is given in the angle coordinate ``[0, 2 pi)``; the grid has
    ``n_points`` nodes (default ``ceil(8/h)``) and must not be coarser than that.
    """
    if not 0 < h < 1:
        raise ValueError("h must lie in (0, 1)")
    need = math.ceil(8.0 / h)
    n = need if n_points is None else int(n_points)
    if n < need:
        raise ValueError(f"grid of {n} points is too coarse for h={h} (need >= {need})")
    if cutoff in (0, "zero", None):
        return NormResult(0.0, "dense_svd")
    grown = thicken(base_set, h ** rho)
    th = 2 * np.pi * np.arange(n) / n
    idx = np.flatnonzero(_circle_membership(th, grown))
    if idx.size == 0:
        return NormResult(0.0, "dense_svd")
    A = fio_matrix(h, n, idx, idx, cutoff=cutoff, band=band)
    return NormResult(float(svdvals(A)[0]), "dense_svd")


def circle_cantor(M: int, alphabet, k: int) -> IntervalSet:
    """Image of the depth-k Cantor set under ``x -> 2 pi x``."""
    from .regular_sets import cantor_intervals
    base = cantor_intervals(CantorSpec(M, tuple(alphabet), k))
    return IntervalSet(Interval(2 * np.pi * iv.lo, 2 * np.pi * iv.hi) for iv in base)


__all__.append("circle_cantor")
