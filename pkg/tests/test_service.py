from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from duolink.service.app import create_app
from duolink.trace import LOG_HEADER


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture
def logs(client, tmp_path):
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    resp = client.post(
        "/gen",
        json={"n": 400, "out_a": str(out_a), "out_b": str(out_b), "seed": 3},
    )
    assert resp.status_code == 200
    return out_a, out_b


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"


class TestGen:
    def test_writes_both_logs(self, client, tmp_path):
        out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
        resp = client.post(
            "/gen", json={"n": 50, "out_a": str(out_a), "out_b": str(out_b)}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["rng_algorithm"] == "python-random-mt19937"
        assert [c["channel_id"] for c in body["channels"]] == ["A", "B"]
        assert [c["seed"] for c in body["channels"]] == [1, 2]
        assert out_a.read_text().splitlines()[0] == LOG_HEADER
        assert len(out_b.read_text().splitlines()) == 51

    def test_zero_packets(self, client, tmp_path):
        resp = client.post(
            "/gen",
            json={"n": 0, "out_a": str(tmp_path / "a.csv"), "out_b": str(tmp_path / "b.csv")},
        )
        assert resp.status_code == 200
        assert (tmp_path / "a.csv").read_text() == LOG_HEADER + "\n"

    def test_seed_override_changes_output(self, client, tmp_path):
        paths = [tmp_path / n for n in ("a1", "b1", "a2", "b2")]
        client.post("/gen", json={"n": 30, "out_a": str(paths[0]), "out_b": str(paths[1]), "seed": 1})
        client.post("/gen", json={"n": 30, "out_a": str(paths[2]), "out_b": str(paths[3]), "seed": 2})
        assert paths[0].read_text() != paths[2].read_text()

    def test_negative_n_rejected(self, client, tmp_path):
        resp = client.post(
            "/gen", json={"n": -1, "out_a": str(tmp_path / "a"), "out_b": str(tmp_path / "b")}
        )
        assert resp.status_code == 422

    def test_unwritable_output_is_io_error(self, client, tmp_path):
        resp = client.post(
            "/gen",
            json={
                "n": 1,
                "out_a": str(tmp_path / "missing_dir" / "a.csv"),
                "out_b": str(tmp_path / "b.csv"),
            },
        )
        assert resp.status_code == 500
        assert resp.json()["detail"]["code"] == "io_error"


class TestEval:
    def test_all_seven_modes(self, client, logs, tmp_path):
        out_a, out_b = logs
        resp = client.post(
            "/eval",
            json={
                "trace_a": str(out_a),
                "trace_b": str(out_b),
                "out": str(tmp_path / "rep"),
            },
        )
        assert resp.status_code == 200
        body = resp.json()
        assert [row["mode"] for row in body["rows"]] == [
            "A", "B", "A+B", "A->B", "B->A", "A~B", "A^B",
        ]
        assert body["t_d_us"] == 350
        assert body["n_pairs"] == 400
        report_csv = tmp_path / "rep.report.csv"
        report_json = tmp_path / "rep.report.json"
        assert report_csv.exists() and report_json.exists()
        payload = json.loads(report_json.read_text())
        assert payload["meta"]["config_hash"] == body["config_hash"]
        assert set(payload["modes"]) == {r["mode"] for r in body["rows"]}
        cdf_files = [p for p in tmp_path.iterdir() if ".cdf." in p.name]
        assert len(cdf_files) == 7

    def test_configured_percentiles_in_json_report(self, client, logs, tmp_path):
        out_a, out_b = logs
        client.post(
            "/eval",
            json={
                "trace_a": str(out_a),
                "trace_b": str(out_b),
                "modes": ["A"],
                "config": {"percentiles": [0.25, 0.5, 0.9]},
                "out": str(tmp_path / "rep"),
            },
        )
        payload = json.loads((tmp_path / "rep.report.json").read_text())
        extras = payload["modes"]["A"]["percentiles"]
        assert set(extras) == {"0.25", "0.5", "0.9"}
        assert extras["0.5"] == payload["modes"]["A"]["p50_us"]
        assert extras["0.25"] <= extras["0.5"] <= extras["0.9"]

    def test_mode_subset_and_td_override(self, client, logs):
        out_a, out_b = logs
        resp = client.post(
            "/eval",
            json={
                "trace_a": str(out_a),
                "trace_b": str(out_b),
                "modes": ["A", "A->B"],
                "t_d_us": 150,
            },
        )
        body = resp.json()
        assert [row["mode"] for row in body["rows"]] == ["A", "A->B"]
        assert body["t_d_us"] == 150
        assert body["rows"][0]["t_d_us"] is None
        assert body["rows"][1]["t_d_us"] == 150

    def test_attempts_additivity_in_rows(self, client, logs):
        out_a, out_b = logs
        body = client.post(
            "/eval",
            json={"trace_a": str(out_a), "trace_b": str(out_b), "modes": ["A", "B", "A+B"]},
        ).json()
        by_mode = {row["mode"]: row for row in body["rows"]}
        n = by_mode["A"]["n"]
        total_a = by_mode["A"]["mean_attempts"] * n
        total_b = by_mode["B"]["mean_attempts"] * n
        total_ab = by_mode["A+B"]["mean_attempts"] * n
        assert total_ab == pytest.approx(total_a + total_b, rel=1e-12)

    def test_unknown_mode_rejected(self, client, logs):
        out_a, out_b = logs
        resp = client.post(
            "/eval",
            json={"trace_a": str(out_a), "trace_b": str(out_b), "modes": ["A<>B"]},
        )
        assert resp.status_code == 422
        assert resp.json()["detail"]["code"] == "validation_error"

    def test_missing_trace_is_io_error(self, client, tmp_path):
        resp = client.post(
            "/eval",
            json={"trace_a": str(tmp_path / "nope.csv"), "trace_b": str(tmp_path / "nope2.csv")},
        )
        assert resp.status_code == 500
        assert resp.json()["detail"]["code"] == "io_error"

    def test_malformed_log_is_parse_error(self, client, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text(LOG_HEADER + "\n1,0,1,xx,1,7\n")
        good = tmp_path / "good.csv"
        good.write_text(LOG_HEADER + "\n1,0,1,100,1,7\n")
        resp = client.post(
            "/eval", json={"trace_a": str(bad), "trace_b": str(good)}
        )
        assert resp.status_code == 400
        body = resp.json()["detail"]
        assert body["code"] == "parse_error"
        assert "line 2" in body["message"]

    def test_excessive_tolerance_is_validation_error(self, client, logs):
        out_a, out_b = logs
        resp = client.post(
            "/eval",
            json={"trace_a": str(out_a), "trace_b": str(out_b), "tolerance_us": 400_000},
        )
        assert resp.status_code == 422
        assert resp.json()["detail"]["code"] == "validation_error"

    def test_unknown_config_key_rejected(self, client, logs):
        out_a, out_b = logs
        resp = client.post(
            "/eval",
            json={
                "trace_a": str(out_a),
                "trace_b": str(out_b),
                "config": {"sead": 3},
            },
        )
        assert resp.status_code == 422

    def test_max_pairs_truncates(self, client, logs):
        out_a, out_b = logs
        body = client.post(
            "/eval",
            json={
                "trace_a": str(out_a),
                "trace_b": str(out_b),
                "modes": ["A"],
                "max_pairs": 100,
            },
        ).json()
        assert body["n_pairs"] == 100


class TestSweepEndpoint:
    def test_sweep_writes_long_table(self, client, logs, tmp_path):
        out_a, out_b = logs
        out = tmp_path / "sweep.csv"
        resp = client.post(
            "/sweep",
            json={
                "trace_a": str(out_a),
                "trace_b": str(out_b),
                "modes": ["A+B", "A->B"],
                "grid": [150, 350, 1550],
                "out": str(out),
            },
        )
        assert resp.status_code == 200
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 2 * 3
        assert lines[0].startswith("mode,t_d_us,")

    def test_sweep_matches_eval_cells(self, client, logs, tmp_path):
        out_a, out_b = logs
        sweep_body = client.post(
            "/sweep",
            json={
                "trace_a": str(out_a),
                "trace_b": str(out_b),
                "grid": [350],
                "out": str(tmp_path / "s.csv"),
            },
        ).json()
        eval_body = client.post(
            "/eval",
            json={"trace_a": str(out_a), "trace_b": str(out_b), "t_d_us": 350},
        ).json()
        sweep_rows = {row["mode"]: row for row in sweep_body["rows"]}
        for row in eval_body["rows"]:
            cell = dict(sweep_rows[row["mode"]])
            row = dict(row)
            cell.pop("t_d_us"), row.pop("t_d_us")
            assert cell == row


class TestCdfEndpoint:
    def test_two_point_curve(self, client, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        a.write_text(LOG_HEADER + "\n1,0,1,100,1,7\n2,500000,1,200,1,7\n")
        b.write_text(LOG_HEADER + "\n1,0,1,100,1,7\n2,500000,1,200,1,7\n")
        out = tmp_path / "cdf.csv"
        resp = client.post(
            "/cdf",
            json={"trace_a": str(a), "trace_b": str(b), "mode": "A", "out": str(out)},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["n_points"] == 2
        assert body["delivery_ratio"] == 1.0
        assert out.read_text() == "latency_us,fraction\n100,0.5\n200,1.0\n"

    def test_curve_inversion_matches_report_percentile(self, client, logs, tmp_path):
        out_a, out_b = logs
        out = tmp_path / "cdf.csv"
        client.post(
            "/cdf",
            json={
                "trace_a": str(out_a), "trace_b": str(out_b),
                "mode": "A->B", "t_d_us": 350, "out": str(out),
            },
        )
        eval_body = client.post(
            "/eval",
            json={
                "trace_a": str(out_a), "trace_b": str(out_b),
                "modes": ["A->B"], "t_d_us": 350,
            },
        ).json()
        row = eval_body["rows"][0]
        lines = out.read_text().splitlines()[1:]
        points = [(int(l.split(",")[0]), float(l.split(",")[1])) for l in lines]
        n_total = row["n"]
        n_delivered = n_total - row["lost"]
        import math

        for q, field in ((0.999, "p999_us"), (0.9, "p90_us")):
            rank = math.ceil(q * n_delivered)
            value = next(
                lat for lat, frac in points if round(frac * n_total) >= rank
            )
            assert value == row[field]
