"""Experiment configs, deterministic sweeps, a JSONL result store and CSV output.

A config is a JSON object ``{"kind", "params", "seed", "tolerances", "output"}``.
Each kind has a strict parameter schema; unknown keys are rejected before
any computation. Results are appended to ``<out>/results.jsonl`` in input
order; tabular artifacts go to ``<out>/artifacts``.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .krylov import ConvergenceError

__all__ = [
    "ValidationError",
    "ExperimentConfig",
    "ResultRecord",
    "KINDS",
    "SCHEMA_VERSION",
    "validate_config",
    "config_hash",
    "compute",
    "run",
    "sweep",
    "read_store",
    "emit_plotdata",
    "PLOT_COLUMNS",
]

SCHEMA_VERSION = "1"

_REQ = object()


class ValidationError(ValueError):
    """Config or argument failed validation (CLI exit code 2)."""


def _int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _num(v):
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def _int_list(v):
    return isinstance(v, list) and all(_int(a) for a in v)


def _num_list(v):
    return isinstance(v, list) and all(_num(a) for a in v)


def _str(*choices):
    def check(v):
        return isinstance(v, str) and (not choices or v in choices)
    check.choices = choices
    return check


def _opt(check):
    def inner(v):
        return v is None or check(v)
    inner.inner = check
    return inner


def _coerce(check, v):
    # Reals are stored as floats so that cr=1 and cr=1.0 hash alike.
    check = getattr(check, "inner", check)
    if v is None:
        return v
    if check is _num:
        return float(v)
    if check is _num_list:
        return [float(a) for a in v]
    return v


_SET = {"M": (_int, _REQ), "alphabet": (_int_list, _REQ), "k": (_int, _REQ)}

SCHEMAS = {
    "cantor": dict(_SET),
    "regularity": {**_SET, "delta": (_opt(_num), None), "cr": (_num, 12.0), "scale_lo": (_opt(_num), None),
                   "scale_hi": (_num, 1.0), "mode": (_str("sampled", "cylinders"), "sampled")},
    "fup_norm": {**_SET, "method": (_str("auto", "dense_svd", "power_iteration"), "auto")},
    "ucp": {**_SET, "margin": (_int, 1)},
    "scaling": {"M": (_int, _REQ), "alphabet": (_int_list, _REQ), "k_min": (_int, 1), "k_max": (_int, _REQ),
                "method": (_str("auto", "dense_svd", "power_iteration"), "auto")},
    "baker": {"M": (_int, _REQ), "alphabet": (_int_list, _REQ), "n_list": (_int_list, _REQ),
              "cutoff": (_str("smooth_bump", "sharp_one"), "smooth_bump"), "K": (_num, 1.0),
              "method": (_str("dense_eig", "krylov"), "dense_eig")},
    "exponent": {"formula": (_str("fup", "hyperbolic", "general", "chain", "chain_fup", "baker"), "fup"),
                 "delta": (_opt(_num), None), "cr": (_num, 1.0), "K": (_num, 1.0), "c1": (_opt(_num), None),
                 "M": (_opt(_int), None), "alphabet_size": (_opt(_int), None)},
    "multiplier": {"sigma": (_num, 0.05), "amplitude": (_num, 0.01), "half_width": (_num, 400.0),
                   "n_points": (_int, 2 ** 18)},
    "hilbert_check": {"example": (_str("log", "sqrt_bracket", "lorentzian"), "log"),
                      "half_width": (_num, 400.0), "n_points": (_int, 2 ** 18), "region": (_num, 20.0)},
    "fio": {"h_list": (_num_list, _REQ), "rho": (_num, 0.9), "M": (_int, 3), "alphabet": (_int_list, [0, 2]),
            "k": (_int, 6), "band": (_num, 0.1)},
}
KINDS = tuple(SCHEMAS)
TOLERANCE_KEYS = {"tol": _num, "max_iter": _int, "krylov_tol": _num}
_TOP_KEYS = {"kind", "params", "seed", "tolerances", "output"}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: dict
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    output: str | None = None

    def canonical(self) -> dict:
        """Config with defaults filled in; the basis of ``config_hash``."""
        return {"kind": self.kind, "params": self.params, "seed": self.seed, "tolerances": self.tolerances}

    def to_json(self) -> dict:
        d = self.canonical()
        if self.output is not None:
            d["output"] = self.output
        return d


def validate_config(data) -> ExperimentConfig:
    """Check a raw config dict against its kind's schema, filling defaults."""
    if isinstance(data, ExperimentConfig):
        data = data.to_json()
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    extra = set(data) - _TOP_KEYS
    if extra:
        raise ValidationError(f"unknown config keys: {sorted(extra)}")
    kind = data.get("kind")
    if kind not in SCHEMAS:
        raise ValidationError(f"unknown kind {kind!r}; expected one of {list(KINDS)}")
    raw = data.get("params", {})
    if not isinstance(raw, dict):
        raise ValidationError("params must be an object")
    schema = SCHEMAS[kind]
    extra = set(raw) - set(schema)
    if extra:
        raise ValidationError(f"unknown params for {kind}: {sorted(extra)}")
    params = {}
    for name, (check, default) in schema.items():
        if name in raw:
            if not check(raw[name]):
                raise ValidationError(f"invalid value for {kind}.{name}: {raw[name]!r}")
            params[name] = _coerce(check, raw[name])
        elif default is _REQ:
            raise ValidationError(f"missing required param {kind}.{name}")
        else:
            params[name] = _coerce(check, default)
    seed = data.get("seed", 0)
    if not _int(seed) or seed < 0:
        raise ValidationError("seed must be a nonnegative integer")
    tol = data.get("tolerances", {}) or {}
    if not isinstance(tol, dict):
        raise ValidationError("tolerances must be an object")
    for key, val in tol.items():
        if key not in TOLERANCE_KEYS or not TOLERANCE_KEYS[key](val):
            raise ValidationError(f"invalid tolerance {key!r}: {val!r}")
    out = data.get("output")
    if out is not None and not isinstance(out, str):
        raise ValidationError("output must be a path string")
    tol = {k: float(v) if TOLERANCE_KEYS[k] is _num else v for k, v in sorted(tol.items())}
    cfg = ExperimentConfig(kind, params, seed, tol, out)
    _semantic_checks(cfg)
    return cfg


def _semantic_checks(cfg: ExperimentConfig) -> None:
    p = cfg.params
    if "M" in p and p["M"] is not None and p["M"] < 2:
        raise ValidationError("M must be >= 2")
    if "alphabet" in p and "M" in p and p["M"] is not None:
        a = p["alphabet"]
        if not a or len(set(a)) != len(a) or min(a) < 0 or max(a) >= p["M"]:
            raise ValidationError(f"alphabet {a} is not a set of digits in [0, {p['M'] - 1}]")
    if "k" in p and p["k"] < 1:
        raise ValidationError("k must be >= 1")
    if cfg.kind == "scaling" and p["k_max"] < p["k_min"] + 2:
        raise ValidationError("scaling needs k_max >= k_min + 2")
    if cfg.kind == "baker":
        if not p["n_list"] or any(n < p["M"] or n % p["M"] for n in p["n_list"]):
            raise ValidationError("every N in n_list must be a positive multiple of M")
    if cfg.kind == "exponent":
        f = p["formula"]
        if f == "baker":
            if p["M"] is None or p["alphabet_size"] is None:
                raise ValidationError("baker formula needs M and alphabet_size")
        elif p["delta"] is None:
            raise ValidationError(f"formula {f} needs delta")
        if f == "chain" and p["c1"] is None:
            raise ValidationError("chain formula needs c1")
    if cfg.kind == "multiplier" and not 0 < p["sigma"] < 0.1:
        raise ValidationError("sigma must lie in (0, 0.1)")
    if cfg.kind == "fio" and any(not 0 < h < 1 for h in p["h_list"]):
        raise ValidationError("every h must lie in (0, 1)")


def config_hash(cfg: ExperimentConfig) -> str:
    text = json.dumps(cfg.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class ResultRecord:
    config_hash: str
    timestamp: str
    kind: str
    outputs: dict
    artifacts: dict
    versions: dict
    status: str = "ok"
    error: str | None = None
    config: dict | None = None

    def to_json(self) -> dict:
        return {"config_hash": self.config_hash, "timestamp": self.timestamp, "kind": self.kind,
                "status": self.status, "error": self.error, "outputs": self.outputs,
                "artifacts": self.artifacts, "versions": self.versions, "config": self.config}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ---------------------------------------------------------------------------
# per-kind computations: each returns (outputs, {artifact name: (filename suffix, text or bytes)})

def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        wr.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else f"{v:.17g}"
    if v is None:
        return ""
    return str(v)


def _kind_cantor(p, cfg):
    from .regular_sets import CantorSpec, cantor_measure
    spec = CantorSpec(p["M"], tuple(p["alphabet"]), p["k"])
    ms = cantor_measure(spec)
    out = {"n_intervals": len(ms.support), "n_cylinders": int(len(ms.cells)), "dimension": spec.dimension,
           "total_mass": ms.total_mass, "lebesgue_measure": ms.support.measure()}
    return out, {"set": (".json", json.dumps({**ms.to_json(), "spec": spec.to_json()}))}


def _kind_regularity(p, cfg):
    from .regular_sets import CantorSpec, cantor_measure, verify_regularity
    spec = CantorSpec(p["M"], tuple(p["alphabet"]), p["k"])
    ms = cantor_measure(spec)
    delta = spec.dimension if p["delta"] is None else p["delta"]
    lo = spec.base ** -spec.depth if p["scale_lo"] is None else p["scale_lo"]
    rep = verify_regularity(ms, delta, p["cr"], lo, p["scale_hi"], mode=p["mode"])
    return rep.to_json(), {}


FUP_COLUMNS = ["N", "X", "Y", "norm", "method", "iterations", "residual"]


def _kind_fup_norm(p, cfg):
    from .discrete_fup import cantor_discrete, fup_norm
    x = cantor_discrete(p["M"], p["alphabet"], p["k"])
    tol = cfg.tolerances
    r = fup_norm(x, x, method=p["method"], tol=tol.get("tol", 1e-10), max_iter=tol.get("max_iter", 100_000),
                 seed=cfg.seed)
    row = r.to_row(x.n, len(x), len(x))
    return row, {"row": (".csv", _csv_text(FUP_COLUMNS, [row]))}


def _kind_ucp(p, cfg):
    from .discrete_fup import cantor_discrete, ucp_constant
    y = cantor_discrete(p["M"], p["alphabet"], p["k"])
    u = y.thicken(p["margin"]).complement()
    r = ucp_constant(y, u)
    return {"N": y.n, "Y": len(y), "U": len(u), "value": r.value, "method": r.method}, {}


SCALING_COLUMNS = ["depth", "N", "norm", "log_norm"]


def _kind_scaling(p, cfg):
    from .discrete_fup import scaling_experiment
    tol = cfg.tolerances
    e = scaling_experiment(p["M"], p["alphabet"], p["k_min"], p["k_max"], method=p["method"],
                           tol=tol.get("tol", 1e-10), seed=cfg.seed)
    rows = e.rows()
    out = {"beta_emp": e.fit.slope, "intercept": e.fit.intercept, "max_abs_residual": e.fit.max_abs_residual,
           "rows": [{c: r[c] for c in SCALING_COLUMNS} for r in rows]}
    return out, {"scaling": (".csv", _csv_text(SCALING_COLUMNS, rows))}


def _kind_baker(p, cfg):
    from .baker import GAP_COLUMNS, gap_experiment
    t = gap_experiment(p["M"], p["alphabet"], p["n_list"], p["cutoff"], K=p["K"], method=p["method"],
                       seed=cfg.seed)
    rows = [{c: r[c] for c in GAP_COLUMNS} for r in t.rows]
    clean = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()} for r in rows]
    return {"rows": clean, "flags": t.flags}, {"gap": (".csv", t.to_csv())}


def _kind_exponent(p, cfg):
    from . import exponents as ex
    f = p["formula"]
    if f == "baker":
        return {"formula": f, **ex.baker_gap_bounds(p["M"], p["alphabet_size"], p["K"]).to_json()}, {}
    inp = ex.FupInputs(p["delta"], p["cr"], p["K"])
    if f == "fup":
        return {"formula": f, "beta": ex.beta_fup(inp).to_json()}, {}
    if f == "hyperbolic":
        return {"formula": f, "beta": ex.beta_hyperbolic(inp).to_json()}, {}
    if f == "general":
        g = ex.general_fup_params(inp)
        return {"formula": f, "beta": g.beta.to_json(), "rho": g.rho,
                "structural_discrepancy": g.structural_discrepancy}, {}
    if f == "chain":
        return {"formula": f, **ex.constant_chain(p["delta"], p["cr"], p["c1"], p["K"]).to_json()}, {}
    return {"formula": f, **ex.chain_for_fup(p["delta"], p["cr"], p["K"]).to_json()}, {}


def _kind_multiplier(p, cfg):
    from .multiplier import build_effective_multiplier, construct_psi, sqrt_bracket_weight
    L = p["half_width"]
    w = sqrt_bracket_weight(-L, L, p["n_points"], p["amplitude"])
    r = build_effective_multiplier(w, p["sigma"])
    psi = construct_psi(r)
    out = {**r.to_manifest(), "support_leakage": psi.support_leakage}
    return out, {"omega_tilde": (".bin", r.omega_tilde.to_bytes()),
                 "psi": (".bin", psi.psi.to_bytes())}


def _kind_hilbert_check(p, cfg):
    from .hilbert import GridFunction, hilbert_derivative, hilbert_fft
    L, n, R = p["half_width"], p["n_points"], p["region"]
    ex = p["example"]
    if ex == "log":
        f = GridFunction.from_function(lambda x: np.log(x * x + 1), -L, L, n)
        h = hilbert_derivative(f)
        x = f.x
        ref = -2.0 / (x * x + 1)
        sel = np.abs(x) <= R
        err = float(np.max(np.abs(h.values[sel] - ref[sel]) / np.abs(ref[sel])))
        return {"example": ex, "max_rel_error": err, "region": R}, {}
    if ex == "sqrt_bracket":
        f = GridFunction.from_function(lambda x: (1 + x * x) ** 0.25, -L, L, n)
        h = hilbert_derivative(f)
        return {"example": ex, "sup": float(np.max(np.abs(h.values)))}, {}
    f = GridFunction.from_function(lambda x: 1 / (1 + x * x), -L, L, n)
    x = f.x
    sel = np.abs(x) <= R
    err = float(np.max(np.abs(hilbert_fft(f).values - x / (1 + x * x))[sel]))
    return {"example": ex, "max_abs_error": err, "region": R}, {}


FIO_COLUMNS = ["h", "n_points", "norm"]


def _kind_fio(p, cfg):
    from .discrete_fup import circle_cantor, fio_norm, fit_power_law
    base = circle_cantor(p["M"], p["alphabet"], p["k"])
    rows = []
    for h in p["h_list"]:
        r = fio_norm(h, p["rho"], base, band=p["band"])
        rows.append({"h": h, "n_points": math.ceil(8 / h), "norm": r.value})
    out = {"rows": rows}
    if len(rows) >= 3 and all(r["norm"] > 0 for r in rows):
        fit = fit_power_law([1 / r["h"] for r in rows], [r["norm"] for r in rows])
        out["h_exponent"] = fit.slope
    return out, {"fio": (".csv", _csv_text(FIO_COLUMNS, rows))}


_DISPATCH = {
    "cantor": _kind_cantor, "regularity": _kind_regularity, "fup_norm": _kind_fup_norm, "ucp": _kind_ucp,
    "scaling": _kind_scaling, "baker": _kind_baker, "exponent": _kind_exponent, "multiplier": _kind_multiplier,
    "hilbert_check": _kind_hilbert_check, "fio": _kind_fio,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def compute(cfg) -> tuple:
    """Run one validated config; returns ``(status, outputs, artifacts, error)``."""
    cfg = validate_config(cfg)
    try:
        out, arts = _DISPATCH[cfg.kind](cfg.params, cfg)
        return "ok", _jsonable(out), arts, None
    except ConvergenceError as exc:
        partial = {"partial": True, "estimate": exc.estimate, "residual": exc.residual,
                   "iterations": exc.iterations}
        return "nonconverged", _jsonable(partial), {}, str(exc)
    except ValidationError:
        raise
    except (ValueError, TypeError) as exc:
        raise ValidationError(str(exc)) from exc


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _write(cfg, h, status, outputs, arts, err, out_dir) -> ResultRecord:
    out_dir = cfg.output or out_dir
    refs = {}
    if arts:
        adir = os.path.join(out_dir, "artifacts")
        os.makedirs(adir, exist_ok=True)
        for name, (suffix, payload) in arts.items():
            path = os.path.join(adir, f"{h[:16]}_{name}{suffix}")
            mode = "wb" if isinstance(payload, bytes) else "w"
            with open(path, mode) as fh:
                fh.write(payload)
            refs[name] = os.path.relpath(path, out_dir)
    rec = ResultRecord(config_hash=h, timestamp=_now(), kind=cfg.kind, outputs=outputs, artifacts=refs,
                       versions={"code": __version__, "schema": SCHEMA_VERSION}, status=status, error=err,
                       config=cfg.canonical())
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "results.jsonl"), "a") as fh:
        fh.write(rec.dumps() + "\n")
    return rec


def run(config, out_dir: str = "results") -> ResultRecord:
    """Validate, compute and append one record.

    Raises :class:`ValidationError` (nothing is written). A non-converged
    iteration still produces a record, with ``status="nonconverged"`` and the
    partial estimate in ``outputs``.
    """
    cfg = validate_config(config)
    status, outputs, arts, err = compute(cfg)
    return _write(cfg, config_hash(cfg), status, outputs, arts, err, out_dir)


def _safe_compute(raw):
    try:
        cfg = validate_config(raw)
        return ("ok",) + compute(cfg)
    except ValidationError as exc:
        return ("invalid", None, None, None, str(exc))
    except Exception as exc:  # crash isolation: report, do not abort siblings
        return ("crashed", None, None, None, f"{type(exc).__name__}: {exc}")


def sweep(configs, parallelism: int = 1, out_dir: str = "results") -> list:
    """Run independent configs with at most ``parallelism`` worker processes.

    Records are written by this process alone, in input order. A failing
    config yields a record with ``status`` ``"invalid"`` or ``"error"`` and does
    not stop the others.
    """
    configs = list(configs)
    if parallelism < 1:
        raise ValidationError("parallelism must be >= 1")
    if not configs:
        return []
    raw = [c.to_json() if isinstance(c, ExperimentConfig) else c for c in configs]
    if parallelism == 1 or len(raw) == 1:
        results = [_safe_compute(c) for c in raw]
    else:
        with ProcessPoolExecutor(max_workers=min(parallelism, len(raw))) as pool:
            results = list(pool.map(_safe_compute, raw))
    records = []
    for c, (gate, status, outputs, arts, err) in zip(raw, results):
        if gate == "ok":
            cfg = validate_config(c)
            records.append(_write(cfg, config_hash(cfg), status, outputs, arts, err, out_dir))
            continue
        kind = c.get("kind") if isinstance(c, dict) else None
        h = hashlib.sha256(json.dumps(c, sort_keys=True, default=str).encode()).hexdigest()
        rec = ResultRecord(config_hash=h, timestamp=_now(), kind=str(kind), outputs={}, artifacts={},
                           versions={"code": __version__, "schema": SCHEMA_VERSION},
                           status="invalid" if gate == "invalid" else "error", error=err,
                           config=c if isinstance(c, dict) else None)
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "results.jsonl"), "a") as fh:
            fh.write(rec.dumps() + "\n")
        records.append(rec)
    return records


def read_store(path: str) -> list:
    """All records of a JSONL store, as dicts, in file order."""
    if os.path.isdir(path):
        path = os.path.join(path, "results.jsonl")
    if not os.path.exists(path):
        return []
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


PLOT_COLUMNS = {
    "scaling": ["config_hash", "M", "alphabet", "depth", "N", "norm", "log_norm"],
    "baker": ["config_hash"] + ["M", "alphabet", "N", "special_sequence", "cutoff", "radius", "residual",
                                "pressure_ref", "gap_p_ref", "gap_t_ref", "flags"],
    "fup_norm": ["config_hash"] + FUP_COLUMNS,
    "ucp": ["config_hash", "N", "Y", "U", "value"],
    "exponent": ["config_hash", "formula", "delta", "cr", "K", "kind", "value"],
    "fio": ["config_hash"] + FIO_COLUMNS,
}


def _plot_rows(kind, rec):
    o, c = rec["outputs"], rec.get("config") or {}
    p = c.get("params", {})
    h = rec["config_hash"]
    if kind == "scaling":
        return [{"config_hash": h, "M": p.get("M"), "alphabet": " ".join(map(str, p.get("alphabet", []))), **r}
                for r in o.get("rows", [])]
    if kind == "baker":
        return [{"config_hash": h, **r} for r in o.get("rows", [])]
    if kind == "fup_norm":
        return [{"config_hash": h, **{k: o.get(k) for k in FUP_COLUMNS}}]
    if kind == "ucp":
        return [{"config_hash": h, **{k: o.get(k) for k in ("N", "Y", "U", "value")}}]
    if kind == "exponent":
        beta = o.get("beta")
        if not isinstance(beta, dict):
            return []
        return [{"config_hash": h, "formula": o.get("formula"), "delta": p.get("delta"), "cr": p.get("cr"),
                 "K": p.get("K"), "kind": beta["kind"], "value": beta["value"]}]
    return [{"config_hash": h, **r} for r in o.get("rows", [])]


def emit_plotdata(records, selector: str, path=None) -> str:
    """Tidy CSV of all successful records of kind ``selector``.

    ``records`` is a list of record dicts or :class:`ResultRecord` objects, or
    a path to a store. Column schemas are listed in ``PLOT_COLUMNS``. An empty
    selection gives a header-only CSV.
    """
    if selector not in PLOT_COLUMNS:
        raise ValidationError(f"unknown selector {selector!r}; expected one of {sorted(PLOT_COLUMNS)}")
    if isinstance(records, (str, os.PathLike)):
        records = read_store(os.fspath(records))
    rows = []
    for rec in records:
        rec = rec.to_json() if isinstance(rec, ResultRecord) else rec
        if rec.get("kind") == selector and rec.get("status") == "ok":
            rows.extend(_plot_rows(selector, rec))
    text = _csv_text(PLOT_COLUMNS[selector], rows)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
