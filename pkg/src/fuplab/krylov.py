"""Matrix-free eigensolvers used by the norm and spectrum computations.

``power_iteration`` finds the top eigenvalue of a Hermitian positive
semidefinite operator (squared singular values). ``krylov_schur`` is a
restarted Arnoldi method with Krylov-Schur truncation for the eigenvalue of
largest modulus of a general (non-normal) operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig, schur

__all__ = ["ConvergenceError", "PowerResult", "KrylovResult", "power_iteration", "krylov_schur", "philox"]


def philox(seed: int) -> np.random.Generator:
    """Counter-based generator used for every random start vector."""
    return np.random.Generator(np.random.Philox(int(seed)))


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted; carries the best estimate so far."""

    def __init__(self, message, estimate=None, residual=None, iterations=None):
        super().__init__(message)
        self.estimate = estimate
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class PowerResult:
    eigenvalue: float
    vector: np.ndarray
    iterations: int
    certificate: float
    residual_norm: float


def power_iteration(matvec, dim: int, *, tol: float = 1e-10, max_iter: int = 100_000,
                    seed: int = 0) -> PowerResult:
    """Top eigenvalue of a Hermitian PSD operator by the power method.

    Iterates ``v <- A v / |A v|`` from a seeded complex Gaussian start. The
    Rayleigh quotient ``r = <v, A v>`` and the power estimate ``p = |A v|``
    satisfy ``p >= r`` with ``p - r`` of the order of the squared eigen-residual.
    Convergence requires both ``|r_k - r_(k-1)| <= tol * r_k`` and the
    certificate ``p - r <= tol * r``.
    """
    rng = philox(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    prev = np.inf
    best = (0.0, np.inf)
    for it in range(1, max_iter + 1):
        w = matvec(v)
        rq = float(np.vdot(v, w).real)
        pw = float(np.linalg.norm(w))
        if pw == 0.0:
            return PowerResult(0.0, v, it, 0.0, 0.0)
        cert = pw - rq
        best = (rq, cert)
        if abs(rq - prev) <= tol * rq and cert <= tol * rq:
            res = float(np.linalg.norm(w - rq * v))
            return PowerResult(rq, w / pw, it, cert, res)
        prev = rq
        v = w / pw
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps",
                           estimate=best[0], residual=best[1], iterations=max_iter)


@dataclass(frozen=True)
class KrylovResult:
    eigenvalue: complex
    vector: np.ndarray
    ritz_values: np.ndarray
    residual: float
    restarts: int
    matvecs: int
    converged: bool


def krylov_schur(matvec, dim: int, *, m: int = 32, keep: int | None = None, max_restarts: int = 200,
                 tol: float = 1e-8, seed: int = 0) -> KrylovResult:
    """Eigenvalue of largest modulus by restarted Arnoldi (Krylov-Schur).

    A Krylov decomposition of size ``m`` is built with twice-repeated
    classical Gram-Schmidt. It is reduced to complex Schur form with the
    ``keep`` largest-modulus Ritz values ordered first, truncated, and
    extended again. The process stops when the explicitly computed residual
    ``|A x - lambda x|`` of the leading Ritz pair drops below ``tol``
    (``|x| = 1``), or after ``max_restarts`` restarts, in which case
    ``converged`` is false and the best pair found is returned.
    """
    m = min(m, dim)
    keep = keep if keep is not None else max(1, m // 2)
    keep = min(keep, m - 1) if m > 1 else 0
    rng = philox(seed)
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    V = np.zeros((dim, m + 1), dtype=complex)
    H = np.zeros((m + 1, m), dtype=complex)
    V[:, 0] = v0 / np.linalg.norm(v0)
    k = 0
    nmv = 0
    best = None
    for restart in range(max_restarts + 1):
        size = m
        for j in range(k, m):
            w = matvec(V[:, j])
            nmv += 1
            h = V[:, :j + 1].conj().T @ w
            w = w - V[:, :j + 1] @ h
            h2 = V[:, :j + 1].conj().T @ w
            w = w - V[:, :j + 1] @ h2
            H[:j + 1, j] = h + h2
            beta = np.linalg.norm(w)
            H[j + 1, j] = beta
            if beta <= 1e-13 * max(1.0, np.abs(H[:j + 2, j]).max()):
                size = j + 1
                H[j + 1, j] = 0.0
                break
            V[:, j + 1] = w / beta

        Hs = H[:size, :size]
        vals, vecs = eig(Hs)
        order = np.argsort(-np.abs(vals), kind="stable")
        lam = vals[order[0]]
        y = vecs[:, order[0]]
        y = y / np.linalg.norm(y)
        x = V[:, :size] @ y
        x /= np.linalg.norm(x)
        r = matvec(x) - lam * x
        nmv += 1
        res = float(np.linalg.norm(r))
        if best is None or res < best[2]:
            best = (lam, x, res, vals[order])
        if res <= tol or size < m:
            return KrylovResult(lam, x, vals[order], res, restart, nmv, res <= tol)
        if restart == max_restarts:
            break

        # Krylov-Schur truncation keeping the `keep` largest Ritz values
        thresh = np.abs(vals[order[keep - 1]]) * (1 - 1e-12)
        T, Z, sdim = schur(Hs, output="complex", sort=lambda z: abs(z) >= thresh)
        kk = int(min(max(sdim, 1), m - 1))
        b = H[m, m - 1] * Z[m - 1, :kk]
        Vk = V[:, :m] @ Z[:, :kk]
        V[:, :kk] = Vk
        V[:, kk] = V[:, m]
        V[:, kk + 1:] = 0.0
        H[:] = 0.0
        H[:kk, :kk] = T[:kk, :kk]
        H[kk, :kk] = b
        k = kk
    lam, x, res, ritz = best
    return KrylovResult(lam, x, ritz, res, max_restarts, nmv, False)
