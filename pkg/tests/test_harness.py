import csv
import io
import json
import math
import os

import pytest

from fuplab import harness
from fuplab.cli import main
from fuplab.harness import (
    PLOT_COLUMNS,
    ExperimentConfig,
    ValidationError,
    config_hash,
    emit_plotdata,
    read_store,
    run,
    sweep,
    validate_config,
)

EXPONENT = {"kind": "exponent", "params": {"delta": 0.5, "cr": 1, "K": 1}}
FUP = {"kind": "fup_norm", "params": {"M": 3, "alphabet": [0, 2], "k": 1}}
BAD_ALPHABET = {"kind": "fup_norm", "params": {"M": 3, "alphabet": [0, 5], "k": 2}}


def scaling(k_max, **extra):
    return {"kind": "scaling", "params": {"M": 3, "alphabet": [0, 2], "k_min": 1, "k_max": k_max, **extra}}


def scalars(rec):
    out = rec.outputs if hasattr(rec, "outputs") else rec["outputs"]
    return json.dumps(out, sort_keys=True)


class TestValidation:
    def test_defaults_filled(self):
        cfg = validate_config({"kind": "regularity", "params": {"M": 3, "alphabet": [0, 2], "k": 4}})
        assert cfg.params["cr"] == 12.0 and cfg.params["mode"] == "sampled"
        assert cfg.seed == 0 and cfg.tolerances == {}

    @pytest.mark.parametrize("raw", [
        [],
        {"kind": "nope"},
        {"kind": "exponent", "params": {"delta": 0.5, "typo": 1}},
        {"kind": "exponent", "params": {"delta": "half"}},
        {"kind": "exponent", "params": {"delta": 0.5}, "extra": 1},
        {"kind": "exponent", "params": {"delta": 0.5}, "seed": -1},
        {"kind": "exponent", "params": {"delta": 0.5}, "tolerances": {"atol": 1}},
        {"kind": "exponent", "params": {"formula": "chain", "delta": 0.5}},
        {"kind": "exponent", "params": {"formula": "baker", "M": 3}},
        {"kind": "cantor", "params": {"M": 1, "alphabet": [0], "k": 2}},
        {"kind": "cantor", "params": {"M": 3, "alphabet": [0, 0], "k": 2}},
        {"kind": "cantor", "params": {"M": 3, "alphabet": [0, 2], "k": 0}},
        {"kind": "cantor", "params": {"M": 3, "alphabet": [0, 2], "k": True}},
        {"kind": "scaling", "params": {"M": 3, "alphabet": [0, 2], "k_max": 2}},
        {"kind": "baker", "params": {"M": 3, "alphabet": [0, 2], "n_list": [9, 10]}},
        {"kind": "multiplier", "params": {"sigma": 0.2}},
        {"kind": "fio", "params": {"h_list": [0.1, 1.5]}},
        {"kind": "cantor", "params": {"M": 3, "k": 2}},
        BAD_ALPHABET,
    ])
    def test_rejected(self, raw):
        with pytest.raises(ValidationError):
            validate_config(raw)

    def test_hash_ignores_spelling_of_reals(self):
        a = validate_config({"kind": "exponent", "params": {"delta": 0.5, "cr": 1, "K": 1}})
        b = validate_config({"kind": "exponent", "params": {"K": 1.0, "delta": 0.5, "cr": 1.0, "formula": "fup"}})
        assert config_hash(a) == config_hash(b)
        c = validate_config({"kind": "exponent", "params": {"delta": 0.5, "cr": 2}})
        assert config_hash(a) != config_hash(c)

    def test_output_not_hashed(self):
        a = validate_config(EXPONENT)
        b = validate_config({**EXPONENT, "output": "elsewhere"})
        assert config_hash(a) == config_hash(b)

    def test_round_trip(self):
        cfg = validate_config(FUP)
        assert validate_config(cfg) == cfg
        assert isinstance(cfg, ExperimentConfig)


class TestRun:
    def test_exponent(self, tmp_path):
        rec = run(EXPONENT, out_dir=str(tmp_path))
        assert rec.status == "ok"
        assert rec.outputs["beta"] == {"kind": "loglog_only", "value": 256.0}
        stored = read_store(str(tmp_path))
        assert len(stored) == 1 and stored[0]["config_hash"] == rec.config_hash
        assert stored[0]["versions"]["schema"] == harness.SCHEMA_VERSION

    def test_fup_norm_two_by_two(self, tmp_path):
        rec = run(FUP, out_dir=str(tmp_path))
        # rows/columns {0, 2} of F_3: entries of modulus 3^(-1/2), a rank-two block
        w = complex(math.cos(2 * math.pi / 3), -math.sin(2 * math.pi / 3))
        a = [[1, 1], [1, w ** 4]]
        import numpy as np
        ref = np.linalg.svd(np.array(a) / math.sqrt(3), compute_uv=False)[0]
        assert abs(rec.outputs["norm"] - ref) <= 1e-12
        assert rec.outputs["norm"] == pytest.approx(1.0, abs=1e-12)

    def test_invalid_writes_nothing(self, tmp_path):
        with pytest.raises(ValidationError):
            run(BAD_ALPHABET, out_dir=str(tmp_path))
        assert read_store(str(tmp_path)) == []

    def test_artifacts(self, tmp_path):
        rec = run(scaling(4), out_dir=str(tmp_path))
        path = tmp_path / rec.artifacts["scaling"]
        assert path.name.startswith(rec.config_hash[:16])
        rows = list(csv.DictReader(io.StringIO(path.read_text())))
        assert [int(r["N"]) for r in rows] == [3, 9, 27, 81]
        assert all(int(r["N"]) == 3 ** int(r["depth"]) for r in rows)

    def test_append_only(self, tmp_path):
        run(EXPONENT, out_dir=str(tmp_path))
        first = (tmp_path / "results.jsonl").read_text()
        run(FUP, out_dir=str(tmp_path))
        assert (tmp_path / "results.jsonl").read_text().startswith(first)

    def test_nonconverged_keeps_partial(self, tmp_path):
        cfg = {"kind": "fup_norm", "params": {"M": 3, "alphabet": [0, 2], "k": 5, "method": "power_iteration"},
               "tolerances": {"max_iter": 2}}
        rec = run(cfg, out_dir=str(tmp_path))
        assert rec.status == "nonconverged"
        assert rec.outputs["partial"] and rec.outputs["estimate"] > 0
        assert read_store(str(tmp_path))[0]["status"] == "nonconverged"


class TestSweep:
    def test_empty(self, tmp_path):
        assert sweep([], parallelism=4, out_dir=str(tmp_path)) == []

    def test_identical_configs(self, tmp_path):
        recs = sweep([FUP, FUP], out_dir=str(tmp_path))
        assert recs[0].config_hash == recs[1].config_hash
        assert scalars(recs[0]) == scalars(recs[1])

    def test_parallel_matches_serial(self, tmp_path):
        configs = [scaling(k) for k in range(3, 7)] + [dict(scaling(6), seed=3)]
        serial = sweep(configs, parallelism=1, out_dir=str(tmp_path / "a"))
        parallel = sweep(configs, parallelism=4, out_dir=str(tmp_path / "b"))
        assert [r.config_hash for r in serial] == [r.config_hash for r in parallel]
        assert [scalars(r) for r in serial] == [scalars(r) for r in parallel]
        stored = read_store(str(tmp_path / "b"))
        assert [r["config_hash"] for r in stored] == [r.config_hash for r in parallel]

    def test_failures_isolated(self, tmp_path):
        recs = sweep([EXPONENT, BAD_ALPHABET, FUP], parallelism=2, out_dir=str(tmp_path))
        assert [r.status for r in recs] == ["ok", "invalid", "ok"]
        assert "alphabet" in recs[1].error
        assert len(read_store(str(tmp_path))) == 3

    def test_crash_isolated(self, tmp_path, monkeypatch):
        def boom(p, cfg):
            raise RuntimeError("kaput")
        monkeypatch.setitem(harness._DISPATCH, "cantor", boom)
        recs = sweep([{"kind": "cantor", "params": {"M": 3, "alphabet": [0, 2], "k": 2}}, EXPONENT],
                     out_dir=str(tmp_path))
        assert recs[0].status == "error" and "kaput" in recs[0].error
        assert recs[1].status == "ok"

    def test_parallelism_validated(self):
        with pytest.raises(ValidationError):
            sweep([EXPONENT], parallelism=0)


class TestEmit:
    def test_scaling_schema(self, tmp_path):
        run(scaling(4), out_dir=str(tmp_path))
        text = emit_plotdata(str(tmp_path), "scaling")
        rows = list(csv.DictReader(io.StringIO(text)))
        assert list(rows[0]) == PLOT_COLUMNS["scaling"]
        assert len(rows) == 4
        assert all(int(r["N"]) == 3 ** int(r["depth"]) for r in rows)
        # full precision: the printed norm parses back to the stored double
        stored = read_store(str(tmp_path))[0]["outputs"]["rows"]
        assert [float(r["norm"]) for r in rows] == [r["norm"] for r in stored]

    def test_baker_schema(self, tmp_path):
        run({"kind": "baker", "params": {"M": 3, "alphabet": [0, 2], "n_list": [9, 27]}}, out_dir=str(tmp_path))
        header = emit_plotdata(str(tmp_path), "baker").splitlines()[0].split(",")
        assert header[1:] == ["M", "alphabet", "N", "special_sequence", "cutoff", "radius", "residual",
                              "pressure_ref", "gap_p_ref", "gap_t_ref", "flags"]

    def test_empty_selection(self, tmp_path):
        run(EXPONENT, out_dir=str(tmp_path))
        text = emit_plotdata(str(tmp_path), "scaling")
        assert text == ",".join(PLOT_COLUMNS["scaling"]) + "\n"

    def test_unknown_selector(self):
        with pytest.raises(ValidationError):
            emit_plotdata([], "histogram")


class TestCli:
    def test_exponent(self, tmp_path, capsys):
        code = main(["--out", str(tmp_path), "exponent", "-p", "delta=0.5", "-p", "cr=1", "-p", "K=1"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["outputs"]["beta"]["value"] == 256.0

    def test_flags_after_subcommand(self, tmp_path, capsys):
        code = main(["fup-norm", "--out", str(tmp_path), "--seed", "4", "-p", "M=3", "-p", "alphabet=[0,2]",
                     "-p", "k=2"])
        assert code == 0
        assert read_store(str(tmp_path))[0]["config"]["seed"] == 4

    def test_invalid_exit_two(self, tmp_path, capsys):
        code = main(["--out", str(tmp_path), "fup-norm", "-p", "M=3", "-p", "alphabet=[0,5]", "-p", "k=2"])
        assert code == 2
        assert read_store(str(tmp_path)) == []

    def test_bad_usage_exit_two(self):
        with pytest.raises(SystemExit) as info:
            main(["no-such-command"])
        assert info.value.code == 2

    def test_nonconverged_exit_three(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "fup_norm", "tolerances": {"max_iter": 2},
                                   "params": {"M": 3, "alphabet": [0, 2], "k": 5, "method": "power_iteration"}}))
        assert main(["--out", str(tmp_path), "--config", str(cfg), "fup-norm"]) == 3

    def test_config_kind_mismatch(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(EXPONENT))
        assert main(["--out", str(tmp_path), "--config", str(cfg), "scaling"]) == 2

    def test_sweep_and_emit(self, tmp_path, capsys):
        cfg = tmp_path / "s.json"
        cfg.write_text(json.dumps({"configs": [scaling(4), scaling(5)]}))
        assert main(["--out", str(tmp_path), "--parallelism", "2", "sweep", "--config", str(cfg)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert [json.loads(l)["status"] for l in lines] == ["ok", "ok"]
        assert main(["--out", str(tmp_path), "emit", "--selector", "scaling"]) == 0
        out = tmp_path / "plot_scaling.csv"
        assert len(out.read_text().splitlines()) == 1 + 4 + 5

    def test_sweep_with_invalid_member(self, tmp_path, capsys):
        cfg = tmp_path / "s.json"
        cfg.write_text(json.dumps([EXPONENT, BAD_ALPHABET]))
        assert main(["--out", str(tmp_path), "sweep", "--config", str(cfg)]) == 2
        assert len(read_store(str(tmp_path))) == 2

    def test_emit_unknown_selector(self, tmp_path, capsys):
        assert main(["--out", str(tmp_path), "emit", "--selector", "histogram"]) == 2
        assert not os.path.exists(tmp_path / "plot_histogram.csv")
