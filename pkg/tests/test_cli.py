"""End-to-end command-line behaviour."""

import csv
import json

import pytest

from addmeta.cli import _full_grid, main


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


class TestEffectCommand:
    def test_crude_matches_published_columns(self, table2_csv, tmp_path):
        out = tmp_path / "crude.csv"
        assert main(["effect", str(table2_csv), "-o", str(out)]) == 0
        rows = {r["study_id"]: r for r in read_rows(out)}
        published = {
            "SATIETY": (1.625, 8.675, 0.187),
            "EUFEST": (0.313, 5.470, 0.057),
            "ZHH-FE": (0.199, 1.965, 0.101),
        }
        for study, (beta, sd_beta, d) in published.items():
            row = rows[study]
            assert float(row["beta"]) == pytest.approx(beta, abs=0.03)
            assert float(row["sd_beta"]) == pytest.approx(sd_beta, abs=0.07)
            assert float(row["d"]) == pytest.approx(d, abs=0.015)
            assert row["method"] == "crude"
            assert row["seed"] == "" and row["iterations"] == ""

    def test_pair_mean_standardizer_flag(self, table2_csv, tmp_path):
        out = tmp_path / "crude_pair.csv"
        assert main(["effect", str(table2_csv), "--standardizer", "pair-mean", "-o", str(out)]) == 0
        rows = {r["study_id"]: r for r in read_rows(out)}
        assert float(rows["SATIETY"]["sd_beta"]) == pytest.approx(8.6169, abs=1e-3)

    def test_sim_matches_published_d(self, table2_csv, tmp_path):
        out = tmp_path / "sim.csv"
        code = main(["effect", str(table2_csv), "--method", "sim",
                     "--iterations", "4000", "--seed", "11", "-o", str(out)])
        assert code == 0
        rows = {r["study_id"]: r for r in read_rows(out)}
        for study, d in (("SATIETY", 0.180), ("EUFEST", 0.136), ("ZHH-FE", 0.085)):
            assert float(rows[study]["d"]) == pytest.approx(d, abs=0.02)
            assert rows[study]["seed"] == "11"
            assert rows[study]["iterations"] == "4000"

    def test_empty_csv_fails_with_no_studies(self, tmp_path, capsys):
        empty = tmp_path / "empty.csv"
        empty.write_text("study_id,m1,m2,m3,sd1,sd2,sd3,n1,n2,n3\n")
        assert main(["effect", str(empty), "-o", str(tmp_path / "o.csv")]) == 1
        assert "no studies" in capsys.readouterr().err

    def test_row_errors_carry_row_numbers(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text(
            "study_id,m1,m2,m3,sd1,sd2,sd3,n1,n2,n3\n"
            "ok,1,2,3,1,1,1,5,5,5\n"
            "broken,1,2,3,0,1,1,5,5,5\n"
        )
        assert main(["effect", str(bad), "-o", str(tmp_path / "o.csv")]) == 1
        err = capsys.readouterr().err
        assert "row 3" in err

    def test_json_input_mirror(self, tmp_path):
        data = [dict(study_id="j", m1=4, m2=5.5, m3=7, sd1=1, sd2=1, sd3=1, n1=10, n2=10, n3=10)]
        src = tmp_path / "studies.json"
        src.write_text(json.dumps(data))
        out = tmp_path / "o.csv"
        assert main(["effect", str(src), "-o", str(out)]) == 0
        assert float(read_rows(out)[0]["beta"]) == pytest.approx(1.5)

    def test_rerun_is_byte_identical(self, table2_csv, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["effect", str(table2_csv), "--method", "sim", "--iterations", "500", "--seed", "3"]
        assert main(args + ["-o", str(a)]) == 0
        assert main(args + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_manifest_written(self, table2_csv, tmp_path):
        out = tmp_path / "c.csv"
        main(["effect", str(table2_csv), "-o", str(out)])
        manifest = json.loads((tmp_path / "c.csv.manifest.json").read_text())
        assert manifest["command"] == "effect"
        assert manifest["options"]["method"] == "crude"
        assert manifest["options"]["standardizer"] == "pooled"

    def test_precision_flag(self, table2_csv, tmp_path):
        out = tmp_path / "p.csv"
        main(["effect", str(table2_csv), "--precision", "12", "-o", str(out)])
        sd = read_rows(out)[0]["sd_beta"]
        assert len(sd.replace(".", "")) > 8  # more digits than the default 6

    def test_workers_env_override(self, table2_csv, tmp_path, monkeypatch):
        monkeypatch.setenv("ADDMETA_WORKERS", "3")
        out = tmp_path / "w.csv"
        baseline = tmp_path / "w1.csv"
        args = ["effect", str(table2_csv), "--method", "sim", "--iterations", "600", "--seed", "5"]
        assert main(args + ["-o", str(out)]) == 0
        manifest = json.loads((tmp_path / "w.csv.manifest.json").read_text())
        assert manifest["options"]["workers"] == 3
        monkeypatch.delenv("ADDMETA_WORKERS")
        assert main(args + ["-o", str(baseline)]) == 0
        assert out.read_bytes() == baseline.read_bytes()  # worker count never changes results


class TestMetaCommand:
    def test_single_row_passthrough(self, tmp_path):
        effects = tmp_path / "e.csv"
        effects.write_text("study_id,g,v_g\nonly,0.5,0.04\n")
        out = tmp_path / "m.csv"
        assert main(["meta", str(effects), "-o", str(out)]) == 0
        row = read_rows(out)[0]
        assert float(row["g_wm"]) == 0.5
        assert float(row["tau2"]) == 0.0
        assert int(row["k"]) == 1

    def test_symmetric_studies_pool_to_midpoint(self, tmp_path):
        effects = tmp_path / "e.csv"
        effects.write_text("study_id,g,v_g\na,0.1,0.01\nb,0.5,0.01\n")
        out = tmp_path / "m.csv"
        assert main(["meta", str(effects), "-o", str(out)]) == 0
        row = read_rows(out)[0]
        assert float(row["g_wm"]) == pytest.approx(0.3)
        assert float(row["tau2"]) == pytest.approx(0.07)

    def test_three_study_hand_oracle(self, tmp_path):
        # hand-computed DerSimonian-Laird: w=(50,25,20); Q, tau2 from the formula
        gs, vs = [0.2, 0.5, 0.8], [0.02, 0.04, 0.05]
        w = [1 / v for v in vs]
        g_fe = sum(wi * gi for wi, gi in zip(w, gs)) / sum(w)
        q = sum(wi * (gi - g_fe) ** 2 for wi, gi in zip(w, gs))
        c = sum(w) - sum(wi**2 for wi in w) / sum(w)
        tau2 = max(0.0, (q - 2) / c)
        ws = [1 / (v + tau2) for v in vs]
        expected = sum(wi * gi for wi, gi in zip(ws, gs)) / sum(ws)
        effects = tmp_path / "e.csv"
        effects.write_text("study_id,g,v_g\na,0.2,0.02\nb,0.5,0.04\nc,0.8,0.05\n")
        out = tmp_path / "m.csv"
        assert main(["meta", str(effects), "-o", str(out)]) == 0
        row = read_rows(out)[0]
        assert float(row["g_wm"]) == pytest.approx(expected, abs=1e-6)
        assert float(row["tau2"]) == pytest.approx(tau2, abs=1e-6)


class TestMcCommand:
    def test_single_scenario_config(self, tmp_path):
        config = tmp_path / "scenario.json"
        config.write_text(json.dumps({
            "density": "f1", "L": 5, "mean_vec": [4, 5.5, 7],
            "sigma_ws": 5.0, "n_triplet": [10, 15, 5],
            "mc_reps": 4, "inner_iterations": 40, "seed": 9,
        }))
        out = tmp_path / "bias.csv"
        assert main(["mc", str(config), "-o", str(out)]) == 0
        row = read_rows(out)[0]
        assert row["density"] == "f1"
        assert int(row["replicates"]) == 4
        assert float(row["bias_gwm_sim"]) < float(row["bias_gwm_crude"]) * 10  # sanity only

    def test_reps_override_and_manifest(self, tmp_path):
        config = tmp_path / "scenario.json"
        config.write_text(json.dumps({
            "density": "f2", "L": 5, "mean_vec": [4, 5.5, 7],
            "sigma_ws": 5.0, "n_triplet": [10, 15, 5],
            "mc_reps": 50, "inner_iterations": 30, "seed": 9,
        }))
        out = tmp_path / "bias.csv"
        assert main(["mc", str(config), "--reps", "3", "-o", str(out)]) == 0
        assert int(read_rows(out)[0]["replicates"]) == 3
        manifest = json.loads((tmp_path / "bias.csv.manifest.json").read_text())
        assert manifest["options"]["reps"] == 3

    def test_missing_config_without_full_grid(self, tmp_path, capsys):
        assert main(["mc", "-o", str(tmp_path / "o.csv")]) == 1
        assert "scenario config" in capsys.readouterr().err

    def test_full_grid_enumerates_every_cell(self):
        scenarios = list(_full_grid(1, 1, 0, "paper"))
        assert len(scenarios) == 4 * 3 * 2 * 3 * 8
        assert len(set(scenarios)) == len(scenarios)

    def test_scenario_study_count_key_aliases(self, tmp_path):
        from addmeta.io import read_scenario

        base = {"density": "f1", "mean_vec": [4, 5.5, 7], "sigma_ws": 1.0,
                "n_triplet": [10, 15, 5]}
        config = tmp_path / "s.json"
        config.write_text(json.dumps({**base, "L": 10}))
        assert read_scenario(config).n_studies == 10
        config.write_text(json.dumps({**base, "n_studies": 15}))
        assert read_scenario(config).n_studies == 15
        config.write_text(json.dumps({**base, "L": 10, "n_studies": 15}))
        with pytest.raises(ValueError, match="conflicting"):
            read_scenario(config)
        config.write_text(json.dumps({**base, "L": 10, "bogus": 1}))
        with pytest.raises(ValueError, match="unknown scenario keys"):
            read_scenario(config)


class TestOrCommand:
    def test_published_fixture(self, or_records_csv, tmp_path):
        out = tmp_path / "or.csv"
        assert main(["or", str(or_records_csv), "-o", str(out)]) == 0
        row = read_rows(out)[0]
        assert float(row["or_combined"]) == pytest.approx(1.7274, abs=0.002)
        assert float(row["ci_lo"]) == pytest.approx(1.0217, abs=0.005)
        assert float(row["ci_hi"]) == pytest.approx(2.9205, abs=0.005)
        assert row["pairing"] == "plus+minus"
        assert float(row["ab_distance"]) == 0.0

    def test_null_pair_combines_to_unity(self, tmp_path):
        src = tmp_path / "ors.csv"
        with src.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["study_id", "label", "or", "ci_lo", "ci_hi", "m_top", "m_bottom"])
            writer.writerow(["null", "AB_vs_AA", 1.00, 0.36, 2.81, 30, 30])
            writer.writerow(["null", "BB_vs_AB", 1.00, 0.36, 2.81, 30, 30])
        out = tmp_path / "or.csv"
        assert main(["or", str(src), "-o", str(out)]) == 0
        assert float(read_rows(out)[0]["or_combined"]) == pytest.approx(1.0, abs=0.05)

    def test_missing_label_reported(self, tmp_path, capsys):
        src = tmp_path / "ors.csv"
        src.write_text(
            "study_id,label,or,ci_lo,ci_hi,m_top,m_bottom\n"
            "lonely,AB_vs_AA,3.00,1.05,8.60,30,30\n"
        )
        assert main(["or", str(src), "-o", str(tmp_path / "o.csv")]) == 1
        assert "BB_vs_AB" in capsys.readouterr().err
