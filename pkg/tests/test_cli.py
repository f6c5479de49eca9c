import csv
import io
import json

import numpy as np
import pytest

from wzsr import cli, dsbs, gaussian
from wzsr.probkit import critical_distortion


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


class TestRange:
    def test_parse(self):
        np.testing.assert_allclose(cli.parse_range("0:1:3"), [0, 0.5, 1])
        np.testing.assert_allclose(cli.parse_range("0.2:0.2:1"), [0.2])

    @pytest.mark.parametrize("bad", ["1:0:3", "0:1:0", "0:1", "a:b:c"])
    def test_invalid(self, bad, capsys):
        code, _, _ = run(capsys, "dsbs-sweep", "--p", "0.25", "--d1-range", bad, "--d2-range", "0:0.1:2")
        assert code == cli.EXIT_INVALID


class TestDsbsSweep:
    def test_header_golden(self, capsys):
        code, out, _ = run(capsys, "dsbs-sweep", "--p", "0.25", "--d1-range", "0.6:0.6:1", "--d2-range", "0.3:0.3:1")
        assert code == 0
        assert out.splitlines()[0] == "D1,D2,region,rate_bits,lb_bits,wz_bits,strict,generalized"

    def test_region1b_matches_closed_form(self, capsys):
        dc = critical_distortion(0.25)
        code, out, _ = run(
            capsys, "dsbs-sweep", "--p", "0.25", "--d1-range", "0.2:0.4:3", "--d2-range", f"0.01:{0.9 * dc}:3"
        )
        rows = read_csv(out)
        assert code == 0 and len(rows) == 9
        for r in rows:
            assert r["region"] == "I-B"
            params = dsbs.DsbsParams(0.25, float(r["D1"]), float(r["D2"]))
            assert float(r["rate_bits"]) == pytest.approx(dsbs.region1b_rate(params), abs=1e-6)
            assert (r["strict"], r["generalized"]) == ("false", "true")

    def test_region4_zero(self, capsys):
        code, out, _ = run(capsys, "dsbs-sweep", "--p", "0.25", "--d1-range", "0.6:0.9:2", "--d2-range", "0.3:0.5:2")
        assert code == 0
        assert all(float(r["rate_bits"]) == 0.0 for r in read_csv(out))

    def test_round_trip_precision(self, capsys, tmp_path):
        out = tmp_path / "s.json"
        code, _, _ = run(capsys, "dsbs-sweep", "--p", "0.25", "--d1-range", "0.3:0.3:1",
                         "--d2-range", "0.1:0.1:1", "--format", "json", "--out", str(out))
        row = json.loads(out.read_text())["rows"][0]
        assert code == 0
        assert row["rate_bits"] == dsbs.hb_rate(dsbs.DsbsParams(0.25, 0.3, 0.1)).rate

    def test_config_file(self, capsys, tmp_path):
        cfg = write_json(tmp_path / "c.json", {"params": {"p": 0.25}, "grid": {"D1": [0.6, 0.6, 1], "D2": [0.1, 0.1, 1]}})
        code, out, _ = run(capsys, "dsbs-sweep", "--config", cfg)
        assert code == 0 and read_csv(out)[0]["region"] == "II"

    def test_invalid_p(self, capsys):
        code, _, err = run(capsys, "dsbs-sweep", "--p", "0.7", "--d1-range", "0:1:2", "--d2-range", "0:1:2")
        assert code == cli.EXIT_INVALID and "p" in err

    def test_io_failure(self, capsys, tmp_path):
        code, _, _ = run(capsys, "dsbs-sweep", "--p", "0.25", "--d1-range", "0.3:0.3:1",
                         "--d2-range", "0.1:0.1:1", "--out", str(tmp_path / "missing" / "x.csv"))
        assert code == cli.EXIT_IO


class TestGaussSweep:
    def test_metadata(self, capsys):
        code, out, _ = run(capsys, "gauss-sweep", "--var-x", "1", "--var-n1", "1", "--var-n2", "1",
                           "--d1-range", "0.5:0.5:1", "--d2-range", "0.25:0.25:1", "--format", "json")
        doc = json.loads(out)
        assert code == 0
        assert doc["metadata"]["D1_star"] == pytest.approx(2 / 3)
        assert doc["metadata"]["D2_star"] == pytest.approx(0.5)
        assert len(doc["rows"]) == 1

    def test_frontier(self, capsys):
        base = gaussian.GaussParams(1, 1, 1, 1, 1)
        D2 = 0.3
        curve = gaussian.boundary_curve(base, D2)
        code, out, _ = run(capsys, "gauss-sweep", "--var-x", "1", "--var-n1", "1", "--var-n2", "1",
                           "--d1-range", f"{curve * 0.999}:{curve * 1.001}:2", "--d2-range", f"{D2}:{D2}:1")
        rows = read_csv(out)
        assert [r["region"] for r in rows] == ["III", "I"]

    def test_missing_variance(self, capsys):
        code, _, _ = run(capsys, "gauss-sweep", "--var-x", "1", "--var-n1", "1",
                         "--d1-range", "0.5:0.5:1", "--d2-range", "0.25:0.25:1")
        assert code == cli.EXIT_INVALID


class TestFiniteOptimize:
    @pytest.fixture
    def fixture_cfg(self):
        source, distortion, D, cards, cfg = cli.load_finite_config(None)
        return cfg

    def test_fixture_matches_closed_form(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, stdout, _ = run(capsys, "finite-optimize", "--out", str(out))
        assert code == 0
        sample = json.loads(out.read_text())
        hb = dsbs.hb_rate(dsbs.DsbsParams(0.25, *sample["distortions"])).rate
        assert abs(sample["cum_rates_bits"][-1] - hb) < 5e-3
        assert len(stdout.strip().split(",")) == 2

    def test_byte_identical(self, capsys, fixture_cfg, tmp_path):
        cfg = write_json(tmp_path / "c.json", {**fixture_cfg, "restarts": 4})
        outs = []
        for k in range(2):
            path = tmp_path / f"o{k}.json"
            assert run(capsys, "finite-optimize", "--config", cfg, "--seed", "3", "--out", str(path))[0] == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_infeasible(self, capsys, fixture_cfg, tmp_path):
        cfg = write_json(tmp_path / "c.json", {**fixture_cfg, "D": [0.0, 0.0], "cards": [1, 1], "restarts": 2})
        code, _, err = run(capsys, "finite-optimize", "--config", cfg)
        assert code == cli.EXIT_INFEASIBLE and "infeasible" in err

    def test_not_degraded(self, capsys, fixture_cfg, tmp_path):
        t = np.zeros((2, 2, 2))
        t[0, 0, :] = t[1, 1, :] = 0.25
        pmf = {"axes": [{"name": n, "size": 2} for n in ("X", "Y1", "Y2")], "table": t.ravel().tolist()}
        cfg = write_json(tmp_path / "c.json", {**fixture_cfg, "pmf": pmf})
        code, _, err = run(capsys, "finite-optimize", "--config", cfg)
        assert code == cli.EXIT_INVALID and "max violation" in err

    def test_missing_config(self, capsys, tmp_path):
        code, _, _ = run(capsys, "finite-optimize", "--config", str(tmp_path / "nope.json"))
        assert code == cli.EXIT_IO


class TestScCheck:
    def test_dsbs_reference(self, capsys, tmp_path):
        rate = dsbs.hb_rate(dsbs.DsbsParams(0.25, 0.3, 0.1)).rate
        cfg = write_json(tmp_path / "c.json", {"channels": [{"bsc": 0.1}, {"bsc": 0.2}], "rhos": [1.0, 1.0],
                                               "dsbs": {"p": 0.25, "D1": 0.3, "D2": 0.1}})
        code, out, _ = run(capsys, "sc-check", "--config", cfg)
        doc = json.loads(out)
        assert code == 0
        assert doc["cum_required_bits"][1] == pytest.approx(rate)
        assert doc["overall_ok"] == (doc["cum_budget_bits"][1] >= rate and doc["per_stage_ok"][0])

    def test_zero_rho(self, capsys, tmp_path):
        for req, expected in [(0.0, True), (0.1, False)]:
            cfg = write_json(tmp_path / "c.json", {"channels": [{"bsc": 0.1}], "rhos": [0.0], "sumrates": [req]})
            code, out, _ = run(capsys, "sc-check", "--config", cfg)
            assert code == 0 and json.loads(out)["overall_ok"] is expected


class TestRefinabilityReport:
    def test_gaussian(self, capsys):
        code, out, _ = run(capsys, "refinability-report", "--model", "gaussian", "--var-x", "1", "--var-n1", "1",
                           "--var-n2", "1", "--d1-range", "0.3:1:4", "--d2-range", "0.1:0.6:4")
        doc = json.loads(out)
        assert code == 0 and doc["all_consistent"] and len(doc["points"]) == 16
