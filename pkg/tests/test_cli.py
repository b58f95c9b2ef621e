"""CLI contract: flags, exit codes, artifact formats, manifests, stability."""

import hashlib
import json
import math

import pytest

from bdheight.cli import main


def run_cli(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def run_json(capsys, *argv):
    rc, out, err = run_cli(capsys, *argv)
    return rc, (json.loads(out) if out.strip().startswith("{") else None), err


class TestDist:
    def test_three_node_values(self, capsys):
        rc, doc, _ = run_json(capsys, "dist", "--n", "3", "--rho", "1")
        assert rc == 0
        rows = doc["data"]["rows"]
        assert rows[0]["survival"] == pytest.approx(1.0, abs=0)
        assert rows[1]["survival"] == pytest.approx(2 / 3, abs=1e-12)
        assert rows[2]["survival"] == pytest.approx(2 / 5, abs=1e-12)
        assert doc["data"]["mean"] == pytest.approx(31 / 15, rel=1e-12)

    def test_single_row(self, capsys):
        rc, doc, _ = run_json(capsys, "dist", "--n", "1", "--rho", "0.5")
        assert rc == 0
        assert doc["data"]["rows"] == [{"k": 1, "survival": 1.0, "pmf": 1.0}]

    def test_csv_format(self, capsys):
        rc, out, _ = run_cli(capsys, "dist", "--n", "3", "--rho", "1", "--format", "csv")
        assert rc == 0
        lines = out.splitlines()
        assert lines[0].startswith("# manifest: ")
        assert lines[1] == "k,survival,pmf"
        assert lines[2].split(",")[1] == "1"
        assert lines[3].split(",")[1] == "0.666666666666667"  # 15 significant digits
        assert any(line.startswith("# mean=") for line in lines)

    def test_invalid_n_exits_2(self, capsys):
        rc, _, err = run_cli(capsys, "dist", "--n", "0", "--rho", "1")
        assert rc == 2
        assert "error" in err

    def test_rate_pair_accepted(self, capsys):
        rc, doc, _ = run_json(capsys, "dist", "--n", "10", "--nu", "1", "--mu", "2")
        assert rc == 0
        assert doc["manifest"]["parameters"]["rho"] == 0.5

    def test_conflicting_parameterizations_exit_2(self, capsys):
        rc, _, _ = run_cli(capsys, "dist", "--n", "3", "--rho", "1", "--nu", "1", "--mu", "1")
        assert rc == 2
        rc, _, _ = run_cli(capsys, "dist", "--n", "3")
        assert rc == 2

    def test_manifest_checksum_matches_data(self, capsys):
        rc, doc, _ = run_json(capsys, "dist", "--n", "5", "--rho", "0.7")
        assert rc == 0
        blob = json.dumps(doc["data"], sort_keys=True, separators=(",", ":")).encode()
        assert doc["manifest"]["data_sha256"] == hashlib.sha256(blob).hexdigest()


class TestAlpha:
    def test_quarter_anchor(self, capsys):
        rc, doc, _ = run_json(capsys, "alpha", "--rho", "0.25")
        assert rc == 0
        assert abs(doc["data"]["alpha"] - 0.5) <= 1e-12
        assert abs(doc["data"]["residual"]) <= 1e-13
        assert doc["data"]["constants"]["c3"] == pytest.approx(26.0, rel=1e-11)

    def test_supercritical_prints_limit_with_note(self, capsys):
        rc, doc, _ = run_json(capsys, "alpha", "--rho", "2")
        assert rc == 0
        assert doc["data"]["f"] == 1.0
        assert doc["data"]["constants"] is None
        assert doc["data"]["note"]

    def test_domain_edge_exits_2(self, capsys):
        assert run_cli(capsys, "alpha", "--rho", "0")[0] == 2
        assert run_cli(capsys, "alpha", "--rho", "-1")[0] == 2


class TestVerify:
    def test_small_grid_passes(self, capsys):
        rc, doc, _ = run_json(capsys, "verify", "--rho", "0.5", "2.0", "--n", "2000")
        assert rc == 0
        assert doc["data"]["passed"] is True
        assert doc["data"]["n_failed"] == 0
        names = {c["inequality"] for c in doc["data"]["checks"]}
        assert {"peak_growth", "peak_decay", "mean_sandwich",
                "mean_near_capacity", "oracle_equivalence"} <= names

    def test_default_grid_passes(self, capsys):
        # default grids: rho {0.25, 0.5, 0.75, 1, 2} x N {1e3, 1e4, 1e5}
        rc, doc, _ = run_json(capsys, "verify")
        assert rc == 0
        assert doc["data"]["passed"] is True
        assert doc["manifest"]["parameters"]["N"] == [1000, 10000, 100000]

    def test_tiny_n_flags_not_applicable_but_passes(self, capsys):
        rc, doc, _ = run_json(capsys, "verify", "--rho", "0.5", "--n", "10")
        assert rc == 0
        assert any(not c["applicable"] for c in doc["data"]["checks"])

    def test_corrupted_constant_fails(self, capsys):
        rc, doc, err = run_json(capsys, "verify", "--rho", "0.5", "--n", "2000",
                                "--selftest-corrupt")
        assert rc == 1
        assert doc["data"]["n_failed"] > 0
        assert "FAILED" in err


class TestSimulateCommand:
    def test_reference_run_passes_band(self, capsys):
        rc, doc, _ = run_json(capsys, "simulate", "--n", "50", "--rho", "0.8",
                              "--samples", "20000", "--seed", "7", "--assert")
        assert rc == 0
        assert doc["data"]["summary"]["dkw_pass"] is True

    def test_byte_identical_reruns(self, tmp_path, capsys):
        args = ["simulate", "--n", "30", "--rho", "0.6", "--samples", "5000",
                "--seed", "11"]
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert main(args + ["--output", str(out1)]) == 0
        assert main(args + ["--output", str(out2)]) == 0
        capsys.readouterr()
        assert out1.read_bytes() == out2.read_bytes()

    def test_worker_count_does_not_change_data(self, capsys):
        rc1, doc1, _ = run_json(capsys, "simulate", "--n", "30", "--rho", "0.6",
                                "--samples", "9000", "--seed", "4", "--workers", "1")
        rc8, doc8, _ = run_json(capsys, "simulate", "--n", "30", "--rho", "0.6",
                                "--samples", "9000", "--seed", "4", "--workers", "8")
        assert rc1 == rc8 == 0
        assert doc1["data"] == doc8["data"]
        assert doc1["manifest"]["data_sha256"] == doc8["manifest"]["data_sha256"]

    def test_infeasible_walk_exits_2_with_warning(self, capsys):
        rc, _, err = run_cli(capsys, "simulate", "--n", "50", "--rho", "0.8",
                             "--samples", "1000", "--mode", "jump-chain")
        assert rc == 2
        assert "warning" in err or "error" in err

    def test_csv_contains_comparison_columns(self, capsys):
        rc, out, _ = run_cli(capsys, "simulate", "--n", "5", "--rho", "1",
                             "--samples", "1000", "--seed", "2", "--format", "csv")
        assert rc == 0
        header = out.splitlines()[1]
        assert header == "k,count,empirical_pmf,exact_pmf,empirical_cdf,exact_cdf"

    def test_worker_env_var_is_honored(self, capsys, monkeypatch):
        monkeypatch.setenv("BDHEIGHT_WORKERS", "3")
        rc, doc, _ = run_json(capsys, "simulate", "--n", "20", "--rho", "0.5",
                              "--samples", "1000", "--seed", "1")
        assert rc == 0
        assert doc["manifest"]["parameters"]["workers"] == 3


class TestSweep:
    def test_supercritical_columns(self, capsys):
        rc, doc, _ = run_json(capsys, "sweep", "--rho", "2", "--n", "100", "1000", "10000")
        assert rc == 0
        rows = doc["data"]["rows"]
        assert [r["N"] for r in rows] == [100, 1000, 10000]
        for r in rows:
            if r["N"] >= 1000:
                assert r["mean_gap"] <= 4.0 / r["N"]
            assert r["var_limit"] == pytest.approx(0.5)

    def test_missing_grid_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "--rho", "2"])
        assert exc.value.code == 2
        capsys.readouterr()

    def test_non_ascending_grid_exits_2(self, capsys):
        rc, _, err = run_cli(capsys, "sweep", "--rho", "2", "--n", "100", "100")
        assert rc == 2
        assert "ascending" in err


class TestParserContract:
    @pytest.mark.parametrize("sub", ["dist", "alpha", "verify", "simulate", "sweep"])
    def test_help_exits_0(self, sub, capsys):
        with pytest.raises(SystemExit) as exc:
            main([sub, "--help"])
        assert exc.value.code == 0
        capsys.readouterr()

    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["dist", "--n", "3", "--rho", "1", "--bogus"])
        assert exc.value.code == 2
        capsys.readouterr()

    def test_json_keys_are_sorted(self, capsys):
        rc, out, _ = run_cli(capsys, "alpha", "--rho", "0.5")
        assert rc == 0
        doc = json.loads(out)
        assert out == json.dumps(doc, sort_keys=True, indent=2) + "\n"
