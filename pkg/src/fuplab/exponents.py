"""Explicit exponents and constants, evaluated without underflow.

The quantities involved range from ordinary numbers to things like
``exp(-exp(5184))``. Every positive quantity is carried as a :class:`LogReal`
holding the number itself, its logarithm, or the logarithm of minus its
logarithm. Arithmetic is done with :mod:`mpmath` at 60 significant digits;
no intermediate ever passes through a double that could underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath

__all__ = [
    "LogReal",
    "FupInputs",
    "ChainConstants",
    "GapBound",
    "GapBounds",
    "beta_fup",
    "beta_hyperbolic",
    "general_fup_params",
    "constant_chain",
    "chain_for_fup",
    "baker_gap_bounds",
    "fit_shape_constant",
    "T_SEARCH_LIMIT",
]

_ctx = mpmath.MPContext()
_ctx.dps = 60
mpf = _ctx.mpf

T_SEARCH_LIMIT = 10 ** 6
_FLOAT_LOG_MAX = math.log(1.7976931348623157e308)
_FLOAT_LOG_MIN = math.log(2.2250738585072014e-308)

_KINDS = ("direct", "log_only", "loglog_only")


class LogReal:
    """A positive real number stored as ``q``, ``ln q`` or ``ln(-ln q)``.

    ``kind`` names the representation held in ``value``. Direct values must
    be representable as normal doubles; ``loglog_only`` needs ``q < 1``.
    Comparisons between any two kinds are exact in the sense that they never
    round the compared quantities to doubles.
    """

    __slots__ = ("kind", "value")

    def __init__(self, kind: str, value):
        if kind not in _KINDS:
            raise ValueError(f"unknown LogReal kind {kind!r}")
        v = mpf(value)
        if not _ctx.isfinite(v):
            raise ValueError("LogReal value must be finite")
        if kind == "direct":
            if v <= 0:
                raise ValueError("LogReal holds positive quantities only")
            lv = _ctx.log(v)
            if not _FLOAT_LOG_MIN <= lv <= _FLOAT_LOG_MAX:
                raise OverflowError("value is outside the normal double range")
        self.kind = kind
        self.value = v

    # constructors --------------------------------------------------------
    @classmethod
    def direct(cls, q) -> "LogReal":
        return cls("direct", q)

    @classmethod
    def from_log(cls, log_q) -> "LogReal":
        return cls("log_only", log_q)

    @classmethod
    def from_loglog(cls, v) -> "LogReal":
        return cls("loglog_only", v)

    @classmethod
    def best(cls, log_q) -> "LogReal":
        """Pick the most direct kind able to hold ``exp(log_q)``."""
        log_q = mpf(log_q)
        if _FLOAT_LOG_MIN + 1 <= log_q <= _FLOAT_LOG_MAX - 1:
            return cls("direct", _ctx.exp(log_q))
        return cls("log_only", log_q)

    # views ---------------------------------------------------------------
    def log(self):
        """``ln q`` as an mpf."""
        if self.kind == "direct":
            return _ctx.log(self.value)
        if self.kind == "log_only":
            return self.value
        return -_ctx.exp(self.value)

    def loglog(self):
        """``ln(-ln q)`` as an mpf; requires ``q < 1``."""
        if self.kind == "loglog_only":
            return self.value
        lq = self.log()
        if lq >= 0:
            raise ValueError("ln(-ln q) needs q < 1")
        return _ctx.log(-lq)

    def to(self, kind: str) -> "LogReal":
        if kind == self.kind:
            return self
        if kind == "direct":
            return LogReal("direct", _ctx.exp(self.log()))
        if kind == "log_only":
            return LogReal("log_only", self.log())
        return LogReal("loglog_only", self.loglog())

    def __float__(self):
        if self.kind == "direct":
            return float(self.value)
        lq = self.log()
        if lq < _FLOAT_LOG_MIN - 50:
            return 0.0
        if lq > _FLOAT_LOG_MAX:
            return math.inf
        return float(_ctx.exp(lq))

    def is_less_than_one(self) -> bool:
        return self.kind == "loglog_only" or self.log() < 0

    def _key(self):
        if self.kind != "loglog_only" and self.log() >= 0:
            return (1, self.log())
        return (0, -self.loglog())

    def __eq__(self, other):
        return isinstance(other, LogReal) and self._key() == other._key()

    def __lt__(self, other):
        return self._key() < other._key()

    def __le__(self, other):
        return self._key() <= other._key()

    def __gt__(self, other):
        return self._key() > other._key()

    def __ge__(self, other):
        return self._key() >= other._key()

    def __hash__(self):
        return hash(self._key())

    def __mul__(self, other: "LogReal") -> "LogReal":
        return LogReal.best(self.log() + other.log())

    def __pow__(self, p) -> "LogReal":
        return LogReal.best(self.log() * mpf(p))

    def scientific(self, digits: int = 6) -> str:
        """Decimal scientific notation ``m e±E`` computed from ``ln q``."""
        l10 = self.log() / _ctx.log(10)
        e = int(_ctx.floor(l10))
        mant = _ctx.power(10, l10 - e)
        return f"{_ctx.nstr(mant, digits)}e{e:+d}"

    def to_json(self) -> dict:
        v = float(self.value)
        out = {"kind": self.kind, "value": v if math.isfinite(v) else _ctx.nstr(self.value, 30)}
        if self.kind == "direct":
            out["text"] = f"{v:.6e}"
        return out

    @classmethod
    def from_json(cls, data: dict) -> "LogReal":
        if set(data) - {"kind", "value", "text"}:
            raise ValueError("unknown LogReal keys")
        return cls(data["kind"], data["value"])

    def __repr__(self):
        return f"LogReal({self.kind}, {_ctx.nstr(self.value, 17)})"


@dataclass(frozen=True)
class FupInputs:
    delta: float
    cr: float
    k_universal: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.cr >= 1:
            raise ValueError(f"cr must be >= 1, got {self.cr}")
        if not self.k_universal > 0:
            raise ValueError("K must be positive")

    @property
    def base(self):
        d = mpf(self.delta)
        return mpf(self.cr) / (d * (1 - d))


def _double_exp_exponent(inp: FupInputs, power: int):
    """``K * (cr/(delta(1-delta)))^(K (1-delta)^-power)`` as an mpf."""
    K = mpf(inp.k_universal)
    d = mpf(inp.delta)
    return K * _ctx.power(inp.base, K / (1 - d) ** power)


def beta_fup(inp: FupInputs) -> LogReal:
    """Exponent of the fractal uncertainty principle, ``ln(-ln beta)`` form."""
    return LogReal.from_loglog(_double_exp_exponent(inp, 2))


def beta_hyperbolic(inp: FupInputs) -> LogReal:
    """Spectral gap size for hyperbolic surfaces, ``ln(-ln beta)`` form."""
    return LogReal.from_loglog(_double_exp_exponent(inp, 3))


@dataclass(frozen=True)
class GeneralFup:
    beta: LogReal
    rho: float
    double_exponential: bool = False
    structural_discrepancy: bool = True


def general_fup_params(inp: FupInputs) -> GeneralFup:
    """Exponent and scale for the general uncertainty principle.

    The printed formula is a single exponential,
    ``beta = exp(-K (cr/(delta(1-delta)))^(K (1-delta)^-3))``, in contrast to
    the double exponential of :func:`beta_fup`. The result carries
    ``structural_discrepancy=True`` so callers can tell the two shapes apart.
    ``rho = 1 - beta/2`` is 1.0 when ``beta/2`` is below double resolution.
    """
    log_beta = -_double_exp_exponent(inp, 3)
    beta = LogReal.from_log(log_beta)
    rho = float(1 - _ctx.exp(log_beta) / 2)
    return GeneralFup(beta=beta, rho=rho)


@dataclass(frozen=True)
class ChainConstants:
    delta: float
    cr: float
    c1: float
    K: float
    c2: float
    c3: float
    C: dict
    kappa: LogReal
    M_freq: LogReal
    c4: LogReal
    c4_from_chain: LogReal
    L: int
    tau: LogReal
    T_iter: int | None
    T_iter_log: LogReal
    T_search_ok: bool
    beta: LogReal
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "delta": self.delta, "cr": self.cr, "c1": self.c1, "K": self.K,
            "c2": self.c2, "c3": self.c3,
            "C": {k: _num_json(v) for k, v in self.C.items()},
            "kappa": self.kappa.to_json(), "M_freq": self.M_freq.to_json(),
            "c4": self.c4.to_json(), "c4_from_chain": self.c4_from_chain.to_json(),
            "L": self.L, "tau": self.tau.to_json(),
            "T_iter": self.T_iter if self.T_iter is None or self.T_iter < 2 ** 63 else str(self.T_iter),
            "T_iter_log": self.T_iter_log.to_json(), "T_search_ok": self.T_search_ok,
            "beta": self.beta.to_json(), "notes": list(self.notes),
        }


def _num_json(v):
    f = float(v)
    return f if math.isfinite(f) else _ctx.nstr(v, 30)


def _t_iter(log_K, log_tau, log_L):
    """Smallest integer T >= 1 with ``K/L^(T-1) <= (tau/2)/(1 - tau/2)``.

    This is ``(1 - K/L^(T-1))^(-1) (1 - tau) <= 1 - tau/2`` solved for the
    power of ``L`` and compared in logarithms. Returns ``(T, ln T, ok)``:
    ``T`` is an exact integer when below ``2**53`` (otherwise ``None``), and
    ``ok`` records that a direct search up to ``T_SEARCH_LIMIT`` found the
    same integer.
    """
    tau = _ctx.exp(log_tau)
    rhs = log_tau - _ctx.log(2) - _ctx.log1p(-tau / 2)
    need = (log_K - rhs) / log_L
    if need < 2 ** 53:
        T = 1 + max(0, int(_ctx.ceil(need)))
        log_T = _ctx.log(T)
    else:
        T = None
        log_T = _ctx.log(need) + _ctx.log1p(1 / need)

    ok = False
    if T is not None and T <= T_SEARCH_LIMIT:
        def holds(t):
            q = _ctx.exp(log_K - (t - 1) * log_L)
            return q < 1 and (1 - tau) / (1 - q) <= 1 - tau / 2
        t = 1
        while t <= T_SEARCH_LIMIT and not holds(t):
            t += 1
        ok = t == T
    return T, log_T, ok


def constant_chain(delta: float, cr: float, c1: float, K: float = 1.0) -> ChainConstants:
    """Chain of constants leading from a cover constant ``c1`` to an exponent.

    Fields follow the order of the argument: ``c2 = c1^6/K`` and
    ``c3 = c1 delta(1-delta)/(K cr^2)``; ``C1, C2, C3`` from the cover bound;
    the intermediate ``C4 .. C11``; the frequency cutoff
    ``M_freq = exp(K (cr^2/(c1 delta(1-delta)))^(3/(1-delta)))``; ``kappa =
    exp(-C1 (ln M_freq)^((1+delta)/2))``; the unique continuation constant
    ``c4 = exp(-exp(K (cr^2/(c1 delta(1-delta)))^(K/(1-delta))))``;
    ``L = ceil((3 cr)^(2/(1-delta)))``; ``tau = K c4^2``; ``T_iter``; and
    ``beta = -log(1 - tau/2)/(T_iter log L)``.

    ``c4_from_chain`` recomputes the continuation constant as
    ``(2 C2 K M_freq^21)^(-1/(2 kappa))`` from the other members, which is far
    smaller than the closed form; both are reported.
    """
    if not 0 < c1 < 1:
        raise ValueError(f"c1 must lie in (0, 1), got {c1}")
    FupInputs(delta, cr, K)
    d, R, a, k = mpf(delta), mpf(cr), mpf(c1), mpf(K)
    dd = d * (1 - d)
    c2 = a ** 6 / k
    c3 = a * dd / (k * R ** 2)
    C = {
        "C1": k * R ** 2 * (1 + _ctx.log(1 / a)) / (a * dd),
        "C2": k * R ** 62 / (a ** 44 * dd ** 31),
        "C3": k * R ** 2 / (a * dd),
        "C4": k / c3 ** 20,
        "C5": k / c3 ** 11,
        "C6": k / c3,
        "C7": 6 - _ctx.log(a),
        "C8": 10 * (6 - _ctx.log(a)) / c3,
        "C9": k / (a * c3 ** 31),
        "C10": k * R ** 62 / (a ** 32 * dd ** 31),
        "C11": k * R ** 2 / (a * dd),
    }
    Q = R ** 2 / (a * dd)
    log_M = k * _ctx.power(Q, 3 / (1 - d))
    M_freq = LogReal.best(log_M)
    log_kappa = -C["C1"] * _ctx.power(log_M, (1 + d) / 2)
    kappa = LogReal.best(log_kappa)
    c4 = LogReal.from_loglog(k * _ctx.power(Q, k / (1 - d)))
    # (2 C2 K M^21)^(-1/(2 kappa)): log = -(ln 2 + ln C2 + ln K + 21 ln M) / (2 kappa)
    inner = _ctx.log(2 * C["C2"] * k) + 21 * log_M
    c4_chain = LogReal.from_loglog(_ctx.log(inner / 2) - log_kappa)

    L = int(_ctx.ceil(_ctx.power(3 * R, 2 / (1 - d)) - mpf(10) ** -40))
    log_L = _ctx.log(L)
    log_tau = _ctx.log(k) + 2 * c4.log() if c4.value < 1e6 else None
    if log_tau is not None:
        tau = LogReal.best(log_tau) if log_tau > _FLOAT_LOG_MIN + 1 else LogReal.from_loglog(_ctx.log(-log_tau))
    else:
        # ln(-ln tau) = v + ln 2 + log1p(-ln K / (2 e^v)), the correction is negligible
        tau = LogReal.from_loglog(c4.value + _ctx.log(2))
    notes = []
    if L < 2:
        raise ValueError("L must be at least 2")

    lt = tau.log() if tau.kind != "loglog_only" or tau.value < 1e6 else None
    if lt is not None:
        T, log_T, ok = _t_iter(_ctx.log(k), lt, log_L)
    else:
        T, ok = None, False
        # ln T ~ ln(-ln tau / ln L)
        log_T = tau.value - _ctx.log(log_L)
        notes.append("T_iter known only through its logarithm")
    if not ok:
        notes.append("T_iter beyond the direct search limit; fixed by log comparison")

    # beta = -log1p(-tau/2) / (T ln L)
    if tau.kind != "loglog_only" and tau.log() > -30:
        t = _ctx.exp(tau.log())
        log_num = _ctx.log(-_ctx.log1p(-t / 2))
    else:
        y_log = tau.log() - _ctx.log(2) if tau.kind != "loglog_only" else None
        if y_log is not None:
            log_num = y_log + _ctx.exp(y_log) / 2
        else:
            log_num = None
    log_den = log_T + _ctx.log(log_L)
    if log_num is not None:
        log_beta = log_num - log_den
        beta = LogReal.best(log_beta) if log_beta > _FLOAT_LOG_MIN + 1 else LogReal.from_loglog(_ctx.log(-log_beta))
    else:
        # ln(-ln beta) with -ln beta = -ln(tau/2) + ln T + ln ln L
        v = tau.value
        beta = LogReal.from_loglog(v + _ctx.log1p((log_den + _ctx.log(2)) / _ctx.exp(v)))
    return ChainConstants(
        delta=float(delta), cr=float(cr), c1=float(c1), K=float(K), c2=float(c2), c3=float(c3), C=C,
        kappa=kappa, M_freq=M_freq, c4=c4, c4_from_chain=c4_chain, L=L, tau=tau, T_iter=T,
        T_iter_log=LogReal.from_log(log_T), T_search_ok=ok, beta=beta, notes=notes)


def chain_for_fup(delta: float, cr: float, K: float = 1.0) -> ChainConstants:
    """The chain with the cover constant tied to the iteration scale, ``c1 = 1/(2L)``."""
    L = int(_ctx.ceil(_ctx.power(3 * mpf(cr), 2 / (1 - mpf(delta))) - mpf(10) ** -40))
    return constant_chain(delta, cr, 1.0 / (2 * L), K)


def fit_shape_constant(delta: float, cr: float, loglog_beta) -> float:
    """Solve ``K' B^(K'/(1-delta)^2) = v`` for ``K'``, where ``B = cr/(delta(1-delta))``.

    The left side increases in ``K'`` whenever ``B > 1``, so bisection on a log
    scale finds the unique root.
    """
    d = mpf(delta)
    B = mpf(cr) / (d * (1 - d))
    if B <= 1:
        raise ValueError("shape fit needs cr/(delta(1-delta)) > 1")
    target = _ctx.log(mpf(loglog_beta))
    lB = _ctx.log(B)

    def g(lk):
        kk = _ctx.exp(lk)
        return lk + kk * lB / (1 - d) ** 2 - target

    lo, hi = mpf(-50), mpf(50)
    if g(lo) > 0 or g(hi) < 0:
        raise ValueError("shape constant out of bracket")
    for _ in range(200):
        mid = (lo + hi) / 2
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return float(_ctx.exp(lo))


@dataclass(frozen=True)
class GapBound:
    name: str
    base: float
    improvement: LogReal
    applicable: bool
    special_sequence: bool = False
    approximate: bool = False

    @property
    def exponent(self) -> float:
        """``base + improvement`` rounded to a double (improvement may vanish)."""
        return float(mpf(self.base) + _ctx.exp(self.improvement.log()))

    def to_json(self) -> dict:
        return {"name": self.name, "base": self.base, "improvement": self.improvement.to_json(),
                "applicable": self.applicable, "special_sequence": self.special_sequence,
                "approximate": self.approximate, "exponent": self.exponent}


@dataclass(frozen=True)
class GapBounds:
    M: int
    alphabet_size: int
    K: float
    delta: float
    pressure: float
    bounds: dict

    def __getitem__(self, name) -> GapBound:
        return self.bounds[name]

    def to_json(self) -> dict:
        return {"M": self.M, "alphabet_size": self.alphabet_size, "K": self.K, "delta": self.delta,
                "pressure": self.pressure, "bounds": {k: b.to_json() for k, b in self.bounds.items()}}


def baker_gap_bounds(M: int, alphabet_size: int, K: float = 1.0) -> GapBounds:
    """Lower bounds on the decay exponent of open baker's maps.

    With ``delta = ln|A| / ln M`` the spectral radius is expected to be at most
    ``M^(-beta)`` for each bound ``beta`` below:

    ``gap_p``     ``1/2 - delta + (40 M^(3 delta))^(-160/(delta(1-delta)))``, for delta <= 1/2
    ``gap_t``     ``exp(-exp(K M^(K (1-delta)^-2)))``, for delta >= 1/2
    ``gap_p_sp``  ``1/2 - delta + 1/(K M^8 ln M)`` along ``N = M^k``, delta <= 1/2
    ``gap_t_sp``  ``exp(-M^(delta/(1-delta)))`` along ``N = M^k``, delta >= 1/2,
                  with the vanishing correction in the exponent dropped
    ``gap_ae``    ``max(1/2 - delta, 0) + 1/(K ln M)`` when ``|delta - 1/2| <= 1/(K ln M)``
    """
    M, A = int(M), int(alphabet_size)
    if not 1 < A < M:
        raise ValueError("need 1 < alphabet_size < M")
    if not K > 0:
        raise ValueError("K must be positive")
    d = _ctx.log(A) / _ctx.log(M)
    k = mpf(K)
    lM = _ctx.log(M)
    half = mpf(1) / 2
    base = float(half - d)
    pressure = max(0.0, base)
    below, above = d <= half, d >= half
    bounds = {
        "gap_p": GapBound("gap_p", base,
                          LogReal.best(-160 / (d * (1 - d)) * _ctx.log(40 * _ctx.power(M, 3 * d))), bool(below)),
        "gap_t": GapBound("gap_t", 0.0, LogReal.from_loglog(k * _ctx.power(M, k / (1 - d) ** 2)), bool(above)),
        "gap_p_sp": GapBound("gap_p_sp", base, LogReal.best(-_ctx.log(k * _ctx.power(M, 8) * lM)),
                             bool(below), special_sequence=True),
        "gap_t_sp": GapBound("gap_t_sp", 0.0, LogReal.from_loglog(d / (1 - d) * lM), bool(above),
                             special_sequence=True, approximate=True),
        "gap_ae": GapBound("gap_ae", pressure, LogReal.best(-_ctx.log(k * lM)),
                           bool(abs(d - half) <= 1 / (k * lM))),
    }
    return GapBounds(M=M, alphabet_size=A, K=float(K), delta=float(d), pressure=pressure, bounds=bounds)
