"""Open quantum baker's maps and their spectral radii.

For a base ``M``, alphabet ``A`` and ``N`` divisible by ``M``,

    B_N = F_N^*  diag(chi F_{N/M} chi, ..., chi F_{N/M} chi)  I_{A,M}

where ``F`` are unitary DFTs, ``chi`` is a cutoff sampled on ``N/M`` points,
and ``I_{A,M}`` keeps block ``a`` (indices ``a N/M .. (a+1) N/M - 1``) for
``a`` in ``A`` and zeroes the others.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import fft, ifft

from .exponents import baker_gap_bounds
from .krylov import krylov_schur

__all__ = [
    "OqmSpec",
    "CutoffGrid",
    "SpectrumResult",
    "GapTable",
    "DENSE_THRESHOLD",
    "cutoff_grid",
    "baker_apply",
    "baker_dense",
    "spectral_radius",
    "gap_experiment",
    "smooth_bump",
]

DENSE_THRESHOLD = 4096
EIGEN_FLOOR = 1e-12
CUTOFFS = ("smooth_bump", "sharp_one")


@dataclass(frozen=True)
class OqmSpec:
    base: int
    alphabet: tuple
    n: int
    cutoff: str = "smooth_bump"

    def __post_init__(self):
        M = int(self.base)
        if M != self.base or M < 2:
            raise ValueError("base must be an integer >= 2")
        letters = sorted(int(a) for a in self.alphabet)
        if not letters or len(set(letters)) != len(letters) or letters[0] < 0 or letters[-1] >= M:
            raise ValueError(f"alphabet must be a nonempty set of digits in [0, {M - 1}]")
        n = int(self.n)
        if n != self.n or n < M or n % M:
            raise ValueError(f"n must be a positive multiple of M={M}, got {self.n}")
        if self.cutoff not in CUTOFFS:
            raise ValueError(f"cutoff must be one of {CUTOFFS}")
        object.__setattr__(self, "base", M)
        object.__setattr__(self, "alphabet", tuple(letters))
        object.__setattr__(self, "n", n)

    @property
    def block(self) -> int:
        return self.n // self.base

    @property
    def is_power_of_base(self) -> bool:
        k = round(math.log(self.n) / math.log(self.base))
        return self.base ** k == self.n

    @property
    def delta(self) -> float:
        return math.log(len(self.alphabet)) / math.log(self.base)


@dataclass(frozen=True, eq=False)
class CutoffGrid:
    values: np.ndarray


def smooth_bump(x):
    """``exp(4 - 1/(x(1-x)))`` on ``(0, 1)``, zero elsewhere; peak 1 at ``x = 1/2``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    xi = x[inside]
    out[inside] = np.exp(4.0 - 1.0 / (xi * (1.0 - xi)))
    return out


def cutoff_grid(spec: OqmSpec) -> CutoffGrid:
    """Cutoff sampled at the left endpoints ``j/(N/M)`` of the block grid."""
    b = spec.block
    if spec.cutoff == "sharp_one":
        vals = np.ones(b)
    else:
        vals = smooth_bump(np.arange(b) / b)
    vals.setflags(write=False)
    return CutoffGrid(vals)


def baker_apply(spec: OqmSpec, v, cutoff: CutoffGrid | None = None) -> np.ndarray:
    """Apply ``B_N`` to a vector, or column by column to an ``(N, k)`` array."""
    v = np.asarray(v)
    if v.shape[0] != spec.n:
        raise ValueError(f"vector length {v.shape[0]} does not match n={spec.n}")
    chi = (cutoff or cutoff_grid(spec)).values
    M, b = spec.base, spec.block
    tail = v.shape[1:]
    w = np.zeros((M, b) + tail, dtype=complex)
    blocks = v.reshape((M, b) + tail)
    keep = list(spec.alphabet)
    shape = (1, b) + (1,) * len(tail)
    c = chi.reshape(shape)
    w[keep] = c * fft(c * blocks[keep], axis=1, norm="ortho")
    return ifft(w.reshape((spec.n,) + tail), axis=0, norm="ortho")


def baker_dense(spec: OqmSpec, *, dense_threshold: int = DENSE_THRESHOLD) -> np.ndarray:
    """The matrix of ``B_N``; column ``j`` is ``baker_apply(e_j)`` through the same code path."""
    if spec.n > dense_threshold:
        raise ValueError(f"dense matrix limited to n <= {dense_threshold}")
    return baker_apply(spec, np.eye(spec.n, dtype=complex))


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    spectral_radius: float
    leading: tuple
    method: str
    residual: float
    converged: bool
    restarts: int = 0

    def to_json(self) -> dict:
        return {"spectral_radius": self.spectral_radius,
                "leading": [[z.real, z.imag] for z in self.leading],
                "method": self.method, "residual": self.residual, "converged": self.converged,
                "restarts": self.restarts}


def spectral_radius(spec: OqmSpec, method: str = "dense_eig", *, n_leading: int = 8, tol: float = 1e-8,
                    seed: int = 0, subspace: int = 32, max_restarts: int = 200) -> SpectrumResult:
    """Largest eigenvalue modulus of ``B_N``.

    ``dense_eig`` diagonalises the full matrix. ``krylov`` runs restarted
    Arnoldi on :func:`baker_apply` with a subspace of ``subspace`` vectors and
    stops when ``|B x - lambda x| <= tol`` for the leading unit Ritz vector.
    Eigenvalues of modulus below ``1e-12`` are left out of ``leading``.
    """
    if method == "dense_eig":
        vals = np.linalg.eigvals(baker_dense(spec))
        vals = vals[np.argsort(-np.abs(vals), kind="stable")]
        lead = tuple(complex(z) for z in vals[:n_leading] if abs(z) >= EIGEN_FLOOR)
        rad = float(abs(vals[0])) if vals.size else 0.0
        return SpectrumResult(rad, lead, "dense_eig", 0.0, True)
    if method != "krylov":
        raise ValueError(f"unknown method {method!r}")
    if spec.n <= 16:
        raise ValueError("krylov method needs n > 16")
    chi = cutoff_grid(spec)
    res = krylov_schur(lambda u: baker_apply(spec, u, chi), spec.n, m=subspace, max_restarts=max_restarts,
                       tol=tol, seed=seed)
    ritz = res.ritz_values
    lead = tuple(complex(z) for z in ritz[:n_leading] if abs(z) >= EIGEN_FLOOR)
    return SpectrumResult(float(abs(res.eigenvalue)), lead, "krylov", res.residual, res.converged, res.restarts)


GAP_COLUMNS = ["M", "alphabet", "N", "special_sequence", "cutoff", "radius", "residual",
               "pressure_ref", "gap_p_ref", "gap_t_ref", "flags"]


@dataclass(frozen=True, eq=False)
class GapTable:
    rows: list
    flags: dict
    references: dict
    bounds: object = None
    notes: list = field(default_factory=list)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(GAP_COLUMNS)
        for r in self.rows:
            wr.writerow([_fmt(r[c]) for c in GAP_COLUMNS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.17g}"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def gap_experiment(M: int, alphabet, n_list, cutoff: str = "smooth_bump", *, K: float = 1.0,
                   method: str = "dense_eig", tail: int = 2, seed: int = 0) -> GapTable:
    """Spectral radii along a list of ``N`` with the gap-bound references ``M^(-beta)``.

    ``flags`` records, for the pressure bound and every applicable improved
    bound, whether the largest radius among the ``tail`` largest ``N`` lies
    below ``M^(-beta)``. Improved references are NaN where a bound does not
    apply (special-sequence bounds apply only on rows with ``N = M^k``).
    """
    letters = tuple(sorted(int(a) for a in alphabet))
    A = len(letters)
    full = A == M
    bounds = None if full or A == 1 else baker_gap_bounds(M, A, K)
    delta = math.log(A) / math.log(M)
    pressure = max(0.0, 0.5 - delta)
    refs = {"pressure": M ** -pressure}
    if bounds is not None:
        for name, b in bounds.bounds.items():
            refs[name] = M ** -b.exponent if b.applicable else float("nan")
    elif A == 1:
        refs["note"] = "single letter: only the pressure reference applies"
    rows = []
    for n in n_list:
        spec = OqmSpec(M, letters, int(n), cutoff)
        res = spectral_radius(spec, method, seed=seed)
        special = spec.is_power_of_base
        row = {
            "M": M, "alphabet": " ".join(map(str, letters)), "N": spec.n, "special_sequence": special,
            "cutoff": cutoff, "radius": res.spectral_radius, "residual": res.residual,
            "pressure_ref": refs["pressure"],
            "gap_p_ref": refs.get("gap_p", float("nan")),
            "gap_t_ref": refs.get("gap_t", float("nan")),
        }
        for name in ("gap_p_sp", "gap_t_sp", "gap_ae"):
            ref = refs.get(name, float("nan"))
            if bounds is not None and bounds[name].special_sequence and not special:
                ref = float("nan")
            row[name + "_ref"] = ref
        rows.append(row)

    largest = sorted(rows, key=lambda r: r["N"])[-max(1, tail):]
    top = max(r["radius"] for r in largest) if largest else float("nan")
    flags = {"pressure": bool(top < refs["pressure"]) and not full}
    for name in ("gap_p", "gap_t", "gap_p_sp", "gap_t_sp", "gap_ae"):
        vals = [r[name + "_ref"] for r in largest if not math.isnan(r[name + "_ref"])]
        flags[name] = bool(vals) and not full and all(r["radius"] < v for r, v in
                                                      zip([r for r in largest if not math.isnan(r[name + "_ref"])], vals))
    flag_text = ";".join(f"{k}={'1' if v else '0'}" for k, v in flags.items())
    for r in rows:
        r["flags"] = flag_text
    return GapTable(rows=rows, flags=flags, references=refs, bounds=bounds)
