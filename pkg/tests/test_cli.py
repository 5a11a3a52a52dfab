import json

import numpy as np
import pytest

from qicsim import __version__
from qicsim.builtins import build_and_protocol, build_classical_exchange, random_protocol
from qicsim.cli import main
from qicsim.engine import InputDistribution, and_task, qic
from qicsim.errors import InputError
from qicsim.io import (
    Table,
    fmt,
    load_protocol,
    parse_prior,
    protocol_from_dict,
    protocol_to_dict,
    table_from_dict,
)


def csv_rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    header = lines[0].split(",")
    return [dict(zip(header, l.split(","))) for l in lines[1:]]


class TestFormat:
    def test_fmt(self):
        assert fmt(None) == ""
        assert fmt(0.0) == "0"
        assert fmt(-0.0) == "0"
        assert fmt(1 / 3) == "0.333333333333"
        assert fmt(np.int64(4)) == "4"
        assert fmt(True) == "true"

    def test_table_header_and_json(self, tmp_path):
        t = Table(["a", "b"], [[1, 0.5], [2, None]], {"seed": 3, "dim_cap": 4096})
        csv = t.to_csv()
        assert csv.splitlines()[0] == f"# qicsim {__version__} seed=3 dim_cap=4096"
        assert csv.splitlines()[2] == "1,0.5"
        c, j = t.write(tmp_path / "sub" / "out")
        doc = json.loads(j.read_text())
        assert doc["rows"][1] == {"a": 2, "b": None}
        assert c.read_text() == csv


class TestProtocolFiles:
    def test_roundtrip_preserves_qic(self):
        rng = np.random.default_rng(0)
        mu = InputDistribution(rng.dirichlet(np.ones(4)).reshape(2, 2))
        for p in (build_and_protocol(1), build_classical_exchange(and_task()), random_protocol(rng, rounds=2, ent_dim=2)):
            q = protocol_from_dict(json.loads(json.dumps(protocol_to_dict(p))))
            assert qic(q, mu).qic_total == pytest.approx(qic(p, mu).qic_total, abs=1e-12)

    def test_error_names_field(self):
        d = protocol_to_dict(build_and_protocol(1))
        d["isometries"][2]["matrix"][0] = [[1, 0]]
        with pytest.raises(InputError, match=r"isometries\[2\]\.matrix\[0\]"):
            protocol_from_dict(d)

    def test_missing_field(self):
        d = protocol_to_dict(build_and_protocol(1))
        del d["isometries"][1]["sender"]
        with pytest.raises(InputError, match=r"isometries\[1\]\.sender"):
            protocol_from_dict(d)

    def test_non_isometry_rejected(self):
        d = protocol_to_dict(build_and_protocol(1))
        d["isometries"][1]["matrix"][0][0] = [2.0, 0.0]
        with pytest.raises(InputError, match=r"isometries\[1\]"):
            protocol_from_dict(d)

    def test_unreadable(self, tmp_path):
        bad = tmp_path / "p.json"
        bad.write_text("{not json")
        with pytest.raises(InputError, match="invalid JSON"):
            load_protocol(bad)


class TestInputs:
    def test_prior(self):
        mu = parse_prior("1/3,1/3,1/3,0")
        assert mu.probs[1, 1] == 0 and mu.probs[0, 0] == pytest.approx(1 / 3)
        with pytest.raises(InputError):
            parse_prior("1/2,1/2")
        with pytest.raises(InputError):
            parse_prior("a,b,c,d")

    def test_table(self):
        t = table_from_dict({"x_size": 2, "y_size": 2, "values": [[0, 1], [1, 0]]})
        assert t.values.tolist() == [[0, 1], [1, 0]]
        with pytest.raises(InputError):
            table_from_dict({"x_size": 2, "y_size": 3, "values": [[0, 1], [1, 0]]})


class TestCommands:
    def test_run_and(self, capsys):
        assert main(["run", "--builtin", "and", "--r", "2", "--prior", "1/3,1/3,1/3,0"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("# qicsim")
        rows = csv_rows(out)
        assert len(rows) == 9
        summary = rows[-1]
        assert summary["round"] == "summary"
        assert float(summary["avg_error"]) <= 1e-12
        assert float(summary["qcc"]) == 8

    def test_run_dummy(self, capsys):
        assert main(["run", "--builtin", "dummy", "--rounds", "4"]) == 0
        assert float(csv_rows(capsys.readouterr().out)[-1]["qic_total"]) == pytest.approx(0, abs=1e-12)

    def test_run_files(self, tmp_path, capsys):
        proto = tmp_path / "p.json"
        assert main(["export-builtin", "classical-and", "--out", str(proto)]) == 0
        dist = tmp_path / "d.json"
        dist.write_text(json.dumps({"probs": [[0.1, 0.2], [0.3, 0.4]]}))
        assert main(["run", "--protocol", str(proto), "--dist", str(dist), "--task", "and", "--out", str(tmp_path / "r")]) == 0
        doc = json.loads((tmp_path / "r.json").read_text())
        summary = doc["rows"][-1]
        assert summary["qic_total"] <= summary["qcc"]
        assert summary["avg_error"] == 0
        assert (tmp_path / "r.csv").read_text().startswith("# qicsim")

    def test_sweep_r(self, capsys):
        assert main(["sweep-r", "--r-min", "1", "--r-max", "8"]) == 0
        rows = csv_rows(capsys.readouterr().out)
        assert len(rows) == 8
        qics = [float(r["qic"]) for r in rows]
        assert all(b < a for a, b in zip(qics, qics[1:]))
        assert [float(r["qcc"]) for r in rows] == [4 * r for r in range(1, 9)]
        assert all(float(r["error"]) <= 1e-12 for r in rows)

    def test_sweep_w(self, capsys):
        assert main(["sweep-w", "--r", "4", "--w", "0,0.1"]) == 0
        rows = csv_rows(capsys.readouterr().out)
        assert abs(float(rows[0]["delta_qic"])) <= 1e-9
        assert float(rows[1]["max_formula_deviation"]) <= 1e-8
        assert float(rows[1]["ratio"]) >= 1.5

    def test_gdm(self, capsys):
        assert main(["gdm", "--function", "xor"]) == 0
        assert csv_rows(capsys.readouterr().out)[0]["value"] == "2"
        assert main(["gdm", "--function", "const"]) == 0
        assert csv_rows(capsys.readouterr().out)[0]["value"] == "0"
        assert main(["gdm", "--function", "disj2"]) == 0
        assert float(csv_rows(capsys.readouterr().out)[0]["value"]) == pytest.approx(1.678071905, abs=1e-9)

    def test_gdm_table_file(self, tmp_path, capsys):
        f = tmp_path / "t.json"
        f.write_text(json.dumps({"x_size": 2, "y_size": 2, "values": [[0, 1], [1, 0]]}))
        assert main(["gdm", "--table", str(f), "--out", str(tmp_path / "g")]) == 0
        doc = json.loads((tmp_path / "g.json").read_text())
        assert doc["rows"][0]["value"] == 2 and doc["witness"] == [[0, 1], [1, 0]]

    def test_verify_subset(self, capsys):
        assert main(["verify", "--suite", "info", "--trials", "3", "--seed", "7"]) == 0
        rows = csv_rows(capsys.readouterr().out)
        assert rows[-1]["failed"] == "0"
        assert {r["suite"] for r in rows[:-1]} == {"info"}

    def test_deterministic_output(self, capsys):
        args = ["verify", "--suite", "engine", "--trials", "2", "--seed", "3"]
        main(args)
        first = capsys.readouterr().out
        main(args)
        assert capsys.readouterr().out == first


class TestExitCodes:
    def test_input_errors(self, tmp_path, capsys):
        assert main(["run", "--builtin", "and", "--prior", "1,2"]) == 2
        assert main(["run"]) == 2
        assert main(["verify", "--suite", "nope"]) == 2
        assert main(["sweep-w", "--w", "0.7"]) == 2
        assert main(["run", "--builtin", "and", "--tol-norm", "-1"]) == 2
        assert main(["run", "--protocol", str(tmp_path / "missing.json")]) == 2

    def test_resource_limit(self, capsys):
        assert main(["run", "--builtin", "and", "--dim-cap", "4"]) == 3
        assert main(["gdm", "--function", "disj3", "--delta", "0.5"]) == 3

    def test_report_violation(self, monkeypatch, capsys):
        from qicsim import engine

        monkeypatch.setattr(engine.QicReport, "violations", lambda self, tol=1e-8: ["forced"])
        assert main(["run", "--builtin", "dummy"]) == 1
