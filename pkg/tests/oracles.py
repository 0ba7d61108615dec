"""Independent reference computations used by the test suite.

Each oracle recomputes a quantity by a different route from the library:
exhaustive enumeration, explicit dense matrices, or decimal arithmetic.
None of them import the code they are checking.
"""

from __future__ import annotations

import cmath
import itertools
import math
from decimal import Decimal, localcontext

import numpy as np


# ---------------------------------------------------------------- Cantor sets

def cantor_cells(M, alphabet, k):
    """Sorted integer indices of depth-k cylinders, via explicit digit strings."""
    out = []
    for digits in itertools.product(sorted(alphabet), repeat=k):
        j = 0
        for a in digits:
            j = j * M + a
        out.append(j)
    return sorted(out)


def exhaustive_regularity(M, alphabet, k, delta, scale_lo, scale_hi, refine=1):
    """Worst ratios over every interval with endpoints on the ``M^-k / refine`` grid.

    Upper ratios ``mu(I)/|I|^delta`` use all grid intervals of admissible
    length meeting ``[0, 1]``; lower ratios ``|I|^delta/mu(I)`` use those whose
    midpoint lies in the support. The measure is uniform inside each depth-k
    cylinder, so masses are exact multiples of ``weight/refine``.
    Returns ``(worst_upper, worst_lower)``.
    """
    N = M ** k
    r = int(refine)
    G = r * N  # grid points per unit length
    cells = np.array(cantor_cells(M, alphabet, k), dtype=np.int64)
    # fine cell p (in [-G, 2G)) is occupied iff its parent cylinder is
    fine = np.zeros(3 * G, dtype=np.int64)
    for q in range(r):
        fine[G + cells * r + q] = 1
    prefix = np.concatenate([[0], np.cumsum(fine)])
    in_cell = fine.astype(bool)
    on_point = in_cell | np.roll(in_cell, 1)
    w = float(len(alphabet)) ** -k / r
    worst_up = worst_low = 0.0
    for L in range(1, 2 * G):
        if not scale_lo - 1e-12 <= L / G <= scale_hi + 1e-12:
            continue
        size = (L / G) ** delta
        a = np.arange(-L, G + 1)
        b = a + L
        mass = (prefix[np.minimum(b, 2 * G) + G] - prefix[np.maximum(a, -G) + G]) * w
        worst_up = max(worst_up, float(mass.max()) / size)
        twice = a + b
        odd = twice % 2 == 1
        centred = np.where(odd, in_cell[(twice // 2) + G], on_point[(twice // 2) + G])
        if centred.any():
            m = mass[centred]
            worst_low = max(worst_low, math.inf if (m == 0).any() else size / float(m.min()))
    return worst_up, worst_low


def grid_cover_count(M, alphabet, k, lo, hi, rho):
    """Number of cells ``rho [j, j+1]`` meeting ``support ∩ [lo, hi]`` in positive length."""
    N = M ** k
    hit = set()
    for c in cantor_cells(M, alphabet, k):
        a, b = max(c / N, lo), min((c + 1) / N, hi)
        if b - a <= 1e-12:
            continue
        j0 = math.floor(a / rho + 1e-9)
        j1 = math.ceil(b / rho - 1e-9)
        hit.update(range(j0, j1))
    return len(hit)


# ------------------------------------------------------------------- DFT norms

def dense_dft_block(N, rows, cols):
    """Unitary DFT entries from ``cmath.exp`` with the phase reduced modulo N."""
    A = np.empty((len(rows), len(cols)), dtype=complex)
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            A[i, j] = cmath.exp(-2j * math.pi * ((r * c) % N) / N)
    return A / math.sqrt(N)


def dense_fup_norm(N, X, Y):
    if not X or not Y:
        return 0.0
    return float(np.linalg.svd(dense_dft_block(N, X, Y), compute_uv=False)[0])


# ----------------------------------------------------------------- baker maps

def dense_baker(M, alphabet, N, cutoff_values):
    """``F_N^* diag(chi F_{N/M} chi) I_A`` assembled from explicit matrices."""
    b = N // M
    FN = dense_dft_block(N, range(N), range(N))
    Fb = dense_dft_block(b, range(b), range(b))
    chi = np.diag(cutoff_values)
    block = chi @ Fb @ chi
    D = np.kron(np.eye(M), block)
    P = np.zeros((N, N))
    for a in alphabet:
        P[a * b:(a + 1) * b, a * b:(a + 1) * b] = np.eye(b)
    return FN.conj().T @ D @ P


def smooth_cutoff_values(b):
    x = [j / b for j in range(b)]
    return np.array([math.exp(4 - 1 / (t * (1 - t))) if 0 < t < 1 else 0.0 for t in x])


# ------------------------------------------------------------- constant chain

def chain_oracle(delta, cr, c1, K, prec=80):
    """Constant chain in decimal arithmetic.

    Doubly small quantities are returned as ``ln(-ln q)``. The iteration count
    ``T`` is returned through ``ln T`` since it is astronomically large.
    """
    with localcontext() as ctx:
        ctx.prec = prec
        d, R, a, k = Decimal(delta), Decimal(cr), Decimal(c1), Decimal(K)
        one = Decimal(1)
        dd = d * (one - d)
        c2 = a ** 6 / k
        c3 = a * dd / (k * R ** 2)
        C1 = k * R ** 2 * (one + (one / a).ln()) / (a * dd)
        C2 = k * R ** 62 / (a ** 44 * dd ** 31)
        C3 = k * R ** 2 / (a * dd)
        Q = R ** 2 / (a * dd)
        ln_M = k * Q ** (Decimal(3) / (one - d))
        ln_neg_ln_kappa = C1.ln() + (one + d) / 2 * ln_M.ln()
        loglog_c4 = k * Q ** (k / (one - d))
        L = int(((3 * R) ** (2 / (one - d)) - Decimal("1e-40")).to_integral_value(rounding="ROUND_CEILING"))
        # tau = K c4^2: -ln tau = 2 e^v - ln K
        v = loglog_c4
        loglog_tau = (2 * v.exp() - k.ln()).ln()
        # T - 1 = ceil((ln K - ln(tau/2) + log1p(-tau/2)) / ln L); tau/2 is negligible here
        neg_ln_tau = loglog_tau.exp()
        need = (k.ln() + neg_ln_tau + Decimal(2).ln()) / Decimal(L).ln()
        ln_T = need.ln()  # T = ceil(need) + 1, and 1/need is below the precision
        # beta = -log(1 - tau/2)/(T ln L) ~ (tau/2)/(T ln L)
        neg_ln_beta = neg_ln_tau + Decimal(2).ln() + ln_T + Decimal(L).ln().ln()
        return {
            "c2": c2, "c3": c3, "C1": C1, "C2": C2, "C3": C3, "L": L,
            "ln_M_freq": ln_M, "loglog_kappa": ln_neg_ln_kappa, "loglog_c4": loglog_c4,
            "loglog_tau": loglog_tau, "ln_T": ln_T, "loglog_beta": neg_ln_beta.ln(),
        }


# ------------------------------------------------------------ Hilbert transform

def pv_hilbert(f, x, half_window=50.0):
    """``(1/pi) PV int f(t)/(x - t) dt`` by adaptive Cauchy-weight quadrature.

    The singular part is integrated on ``[x - w, x + w]`` with QUADPACK's
    Cauchy weight and the two tails by ordinary quadrature to infinity.
    """
    from scipy.integrate import quad
    w = half_window
    mid, _ = quad(f, x - w, x + w, weight="cauchy", wvar=x, limit=400)
    right, _ = quad(lambda t: f(t) / (t - x), x + w, np.inf, limit=400)
    left, _ = quad(lambda t: f(t) / (t - x), -np.inf, x - w, limit=400)
    return -(mid + right + left) / math.pi
