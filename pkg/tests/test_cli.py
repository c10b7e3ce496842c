import csv
import json
import math

import numpy as np
import pytest

from bottleneck_lab import binary_entropy, k_norm, star
from bottleneck_lab.cli import EXIT_BAD_INPUT, EXIT_INFEASIBLE, EXIT_OK, main


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def run_curve(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(
        ["curve", "--bsc", "0.1,0.1", "--output", str(out), "--lambda-steps", "16",
         "--resolution", "128", *extra]
    )
    return code, out


class TestCurveCommand:
    def test_eb_both_writes_csv_and_manifest(self, tmp_path):
        code, out = run_curve(tmp_path, "eb.csv", "--problem", "eb", "--direction", "both")
        assert code == EXIT_OK
        rows = read_csv(out)
        assert rows[0] == ["problem", "direction", "lambda", "x", "y", "trivial", "witness_json"]
        directions = {r[1] for r in rows[1:]}
        assert directions == {"lower", "upper"}
        manifest = json.loads((tmp_path / "eb.csv.manifest.json").read_text())
        assert manifest["command"] == "curve"
        assert manifest["tool_version"]
        assert manifest["parameters"]["problem"] == "eb"
        assert len(manifest["input_digest"]) == 64

    def test_deterministic_reruns(self, tmp_path):
        _, first = run_curve(tmp_path, "a.csv", "--problem", "ib", "--direction", "upper")
        _, second = run_curve(tmp_path, "b.csv", "--problem", "ib", "--direction", "upper")
        assert first.read_bytes() == second.read_bytes()

    def test_product_joint_curves_are_flat(self, tmp_path):
        src = tmp_path / "joint.json"
        joint = np.outer([0.6, 0.4], [0.3, 0.7])
        src.write_text(json.dumps({"p_xy": joint.tolist()}))
        out = tmp_path / "flat.csv"
        code = main(
            ["curve", "--input", str(src), "--problem", "ib", "--direction", "both",
             "--output", str(out), "--lambda-steps", "16", "--resolution", "128"]
        )
        assert code == EXIT_OK
        ys = [float(r[4]) for r in read_csv(out)[1:]]
        assert max(abs(y) for y in ys) <= 1e-12

    def test_missing_source_is_bad_input(self, tmp_path):
        code = main(["curve", "--problem", "ib", "--output", str(tmp_path / "x.csv")])
        assert code == EXIT_BAD_INPUT

    def test_both_sources_is_bad_input(self, tmp_path):
        src = tmp_path / "j.json"
        src.write_text('{"p_xy": [[0.25,0.25],[0.25,0.25]]}')
        code = main(
            ["curve", "--input", str(src), "--bsc", "0.1,0.1", "--problem", "ib",
             "--output", str(tmp_path / "x.csv")]
        )
        assert code == EXIT_BAD_INPUT

    def test_malformed_bsc_is_bad_input(self, tmp_path):
        code = main(["curve", "--bsc", "0.1", "--problem", "ib",
                     "--output", str(tmp_path / "x.csv")])
        assert code == EXIT_BAD_INPUT

    def test_arimoto_needs_binary_source(self, tmp_path):
        src = tmp_path / "ternary.json"
        p = np.full((3, 3), 1.0 / 9.0)
        src.write_text(json.dumps({"p_xy": p.tolist()}))
        code = main(
            ["curve", "--input", str(src), "--problem", "arimoto", "--beta", "2",
             "--output", str(tmp_path / "x.csv"), "--resolution", "32"]
        )
        assert code == EXIT_INFEASIBLE

    def test_frame_mismatch_is_infeasible(self, tmp_path):
        code, _ = run_curve(
            tmp_path, "x.csv", "--problem", "eb", "--frame", "entropy"
        )
        assert code == EXIT_INFEASIBLE

    def test_small_beta_is_bad_input(self, tmp_path):
        code, _ = run_curve(
            tmp_path, "x.csv", "--problem", "arimoto", "--beta", "1.5"
        )
        assert code == EXIT_BAD_INPUT

    def test_no_partial_file_on_failure(self, tmp_path):
        out = tmp_path / "never.csv"
        code = main(["curve", "--bsc", "0.1,0.1", "--problem", "eb",
                     "--frame", "entropy", "--output", str(out)])
        assert code == EXIT_INFEASIBLE
        assert not out.exists()

    def test_arimoto_both_directions_dataset(self, tmp_path):
        out = tmp_path / "arimoto.csv"
        code = main(
            ["curve", "--bsc", "0.4,0.2", "--problem", "arimoto", "--beta", "2",
             "--direction", "both", "--output", str(out),
             "--lambda-steps", "32", "--resolution", "512"]
        )
        assert code == EXIT_OK
        rows = read_csv(out)[1:]
        xs = [float(r[3]) for r in rows]
        assert math.isclose(max(xs), 1.0, abs_tol=1e-12)
        assert min(xs) >= k_norm(0.4, 2.0) - 1e-3
        assert {r[1] for r in rows} == {"lower", "upper"}

    def test_threads_env_respected(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BOTTLENECK_LAB_THREADS", "2")
        code, _ = run_curve(tmp_path, "t.csv", "--problem", "ib", "--direction", "lower")
        assert code == EXIT_OK
        monkeypatch.setenv("BOTTLENECK_LAB_THREADS", "zero")
        code = main(["curve", "--bsc", "0.1,0.1", "--problem", "ib",
                     "--output", str(tmp_path / "u.csv")])
        assert code == EXIT_BAD_INPUT


class TestClosedFormCommand:
    def run(self, tmp_path, name, *extra):
        out = tmp_path / name
        code = main(["closed-form", "--bsc", "0.1,0.1", "--output", str(out), *extra])
        return code, out

    def test_mgl_table_endpoint_row(self, tmp_path):
        code, out = self.run(tmp_path, "mgl.csv", "--law", "mgl", "--points", "101")
        assert code == EXIT_OK
        rows = read_csv(out)
        assert rows[0] == ["q", "delta", "beta", "x", "lower", "upper"]
        first = rows[1]
        assert float(first[3]) == 0.0
        assert math.isclose(float(first[4]), binary_entropy(0.1), abs_tol=1e-12)
        assert first[5] == ""

    def test_mrgl_dominates_mgl_rowwise(self, tmp_path):
        _, mgl_out = self.run(tmp_path, "mgl.csv", "--law", "mgl", "--points", "51")
        _, mrgl_out = self.run(tmp_path, "mrgl.csv", "--law", "mrgl", "--points", "51")
        mgl_rows = read_csv(mgl_out)[1:]
        mrgl_rows = read_csv(mrgl_out)[1:]
        for lo, hi in zip(mgl_rows, mrgl_rows):
            assert lo[3] == hi[3]
            assert float(hi[5]) >= float(lo[4]) - 1e-12

    def test_arimoto_mgl_endpoints(self, tmp_path):
        out = tmp_path / "amgl.csv"
        code = main(
            ["closed-form", "--bsc", "0.4,0.2", "--law", "arimoto-mgl", "--beta", "2",
             "--points", "11", "--output", str(out)]
        )
        assert code == EXIT_OK
        rows = read_csv(out)[1:]
        xs = [float(r[3]) for r in rows]
        ys = [float(r[4]) for r in rows]
        assert math.isclose(min(xs), k_norm(0.4, 2.0), abs_tol=1e-12)
        assert math.isclose(max(xs), 1.0, abs_tol=1e-12)
        by_x = dict(zip(xs, ys))
        assert math.isclose(by_x[max(xs)], k_norm(0.2, 2.0), abs_tol=1e-12)
        assert math.isclose(by_x[min(xs)], k_norm(star(0.4, 0.2), 2.0), abs_tol=1e-12)

    def test_arimoto_rejects_small_beta(self, tmp_path):
        code, _ = self.run(tmp_path, "bad.csv", "--law", "arimoto-mrgl", "--beta", "1.5")
        assert code == EXIT_BAD_INPUT


class TestVerifyCommand:
    def test_mgl_suite_passes(self, capsys):
        code = main(["verify", "--suite", "mgl"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "PASS" in out
