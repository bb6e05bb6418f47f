"""End-to-end CLI tests: run main() in process and inspect stdout and files."""

import json

import numpy as np
import pytest

from pvmerge.cli import main
from pvmerge.grid import SIZE_BUDGET_ENV, GridCopula


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    assert code == 0, err
    return json.loads(out)


class TestMerge:
    def test_average_rule(self, capsys):
        report = run_json(capsys, "merge", "--rule", "avg2", "0.1", "0.3")
        assert report["schema_version"] == 1
        assert report["command"] == "merge"
        assert report["rule"] == {"name": "avg2"}
        assert report["raw"] == pytest.approx(0.4)
        assert report["clipped"] == pytest.approx(0.4)
        assert report["k"] == 2

    def test_hommel(self, capsys):
        report = run_json(capsys, "merge", "--rule", "hommel", "0.1", "0.2", "0.3")
        assert report["raw"] == pytest.approx(0.55)

    def test_ruger_with_order(self, capsys):
        report = run_json(
            capsys, "merge", "--rule", "ruger", "--k", "2", "0.2", "0.05", "0.9", "0.4"
        )
        assert report["clipped"] == pytest.approx(0.40)
        assert report["rule"] == {"name": "ruger", "order": 2}

    def test_scaled_rule(self, capsys):
        report = run_json(capsys, "merge", "--rule", "scaled:0.9", "0.1", "0.3")
        assert report["raw"] == pytest.approx(0.36)
        assert report["rule"] == {"name": "scaled", "alpha": 0.9}

    def test_clipping(self, capsys):
        report = run_json(capsys, "merge", "--rule", "bonferroni", "0.9", "0.8")
        assert report["raw"] == pytest.approx(1.6)
        assert report["clipped"] == 1.0

    def test_input_file(self, capsys, tmp_path):
        path = tmp_path / "pvals.txt"
        path.write_text("0.1 0.3\n")
        report = run_json(capsys, "merge", "--rule", "avg2", "--input", str(path))
        assert report["raw"] == pytest.approx(0.4)

    def test_human_format(self, capsys):
        code, out, _ = run(capsys, "merge", "--rule", "avg2", "0.1", "0.3")
        assert code == 0
        assert "raw: 0.4" in out
        assert "clipped: 0.4" in out

    def test_csv_format(self, capsys):
        code, out, _ = run(
            capsys, "merge", "--rule", "avg2", "0.1", "0.3", "--format", "csv"
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "raw,clipped"
        assert len(lines) == 2

    def test_bad_pvalue_is_diagnosed(self, capsys):
        code, _, err = run(capsys, "merge", "--rule", "avg2", "0.1", "1.7")
        assert code == 2
        assert "p-value #2" in err

    def test_not_a_number(self, capsys):
        code, _, err = run(capsys, "merge", "--rule", "avg2", "0.1", "abc")
        assert code == 2
        assert "not a number" in err

    def test_too_few_values(self, capsys):
        code, _, err = run(capsys, "merge", "--rule", "avg2", "0.1")
        assert code == 2

    def test_ruger_needs_order(self, capsys):
        code, _, err = run(capsys, "merge", "--rule", "ruger", "0.1", "0.3")
        assert code == 2
        assert "--k" in err

    def test_unknown_rule(self, capsys):
        code, _, err = run(capsys, "merge", "--rule", "tippett", "0.1", "0.3")
        assert code == 2

    def test_bad_scaled_alpha(self, capsys):
        code, _, _ = run(capsys, "merge", "--rule", "scaled:zero", "0.1", "0.3")
        assert code == 2
        code, _, _ = run(capsys, "merge", "--rule", "scaled:-1", "0.1", "0.3")
        assert code == 2

    def test_missing_input_file(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "merge", "--rule", "avg2", "--input", str(tmp_path / "nope.txt")
        )
        assert code == 2


class TestUcp:
    def test_sum_threshold_sandwich(self, capsys):
        report = run_json(capsys, "ucp", "--sum-threshold", "0.5", "--n", "64")
        assert report["lower"] == pytest.approx(0.484375)
        assert report["upper"] == pytest.approx(0.515625)
        assert report["gap"] == pytest.approx(2 / 64)
        assert report["reference"] == pytest.approx(0.5)
        assert report["spec"] == {"type": "sum_threshold", "s": "1/2"}

    def test_box_aligned_is_exact(self, capsys):
        report = run_json(capsys, "ucp", "--box", "0.4,0.7", "--n", "20")
        assert report["lower"] == pytest.approx(0.4)
        assert report["reference"] == pytest.approx(0.4)
        assert report["k"] == 2

    def test_ruger_set_aligned_is_exact(self, capsys):
        report = run_json(capsys, "ucp", "--ruger-set", "0.05,1", "--n", "40")
        assert report["lower"] == pytest.approx(0.1)
        assert report["reference"] == pytest.approx(0.1)

    def test_witness_file(self, capsys, tmp_path):
        path = tmp_path / "wit.json"
        report = run_json(
            capsys,
            "ucp", "--sum-threshold", "0.5", "--n", "8", "--emit-witness", str(path),
        )
        payload = json.loads(path.read_text())
        assert payload["schema_version"] == 1
        lower = GridCopula.from_json(payload["lower_witness"])
        upper = GridCopula.from_json(payload["upper_witness"])
        assert lower.validate_marginals().ok
        assert upper.validate_marginals().ok
        from pvmerge.grid import CellEvaluation
        from pvmerge.sets import SumThreshold

        spec = SumThreshold("0.5")
        assert lower.mass_on(spec, CellEvaluation.PESSIMISTIC) == pytest.approx(
            report["lower"]
        )
        assert upper.mass_on(spec, CellEvaluation.OPTIMISTIC) == pytest.approx(
            report["upper"]
        )

    def test_csv_shape(self, capsys):
        code, out, _ = run(
            capsys, "ucp", "--sum-threshold", "0.5", "--n", "8", "--format", "csv"
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "lower,upper,gap,reference"
        assert len(lines) == 2

    def test_needs_exactly_one_spec(self, capsys):
        code, _, err = run(capsys, "ucp", "--n", "8")
        assert code == 2
        code, _, err = run(
            capsys, "ucp", "--sum-threshold", "0.5", "--box", "0.5,0.5", "--n", "8"
        )
        assert code == 2

    def test_box_dimension_conflict(self, capsys):
        code, _, err = run(capsys, "ucp", "--box", "0.4,0.7", "--k", "3", "--n", "8")
        assert code == 2

    def test_bad_fraction(self, capsys):
        code, _, err = run(capsys, "ucp", "--sum-threshold", "half", "--n", "8")
        assert code == 2

    def test_budget_exit_code(self, capsys, monkeypatch):
        monkeypatch.setenv(SIZE_BUDGET_ENV, "100")
        code, _, err = run(capsys, "ucp", "--sum-threshold", "0.5", "--n", "20")
        assert code == 3
        assert SIZE_BUDGET_ENV in err

    def test_budget_env_raise(self, capsys, monkeypatch):
        monkeypatch.setenv(SIZE_BUDGET_ENV, "1000")
        code, _, _ = run(capsys, "ucp", "--sum-threshold", "0.5", "--n", "20")
        assert code == 0


class TestCertify:
    def test_closed_form_passes(self, capsys):
        report = run_json(capsys, "certify", "--sum-threshold", "0.5", "--k", "2")
        assert report["value"] == pytest.approx(0.5)
        assert report["value_exact"] == "1/2"
        assert report["feasible"] is True
        assert report["worst_violation"] == 0.0
        assert report["worst_violation_exact"] == "0"
        assert report["grid_n"] == 101
        assert report["saturated_regime"] is False
        assert report["transforms"] == []

    def test_saturated_regime_flag(self, capsys):
        report = run_json(capsys, "certify", "--sum-threshold", "2", "--k", "2")
        assert report["saturated_regime"] is True
        assert report["value_exact"] == "3/2"
        assert report["feasible"] is True

    def test_k3_default_grid(self, capsys):
        report = run_json(capsys, "certify", "--sum-threshold", "0.75", "--k", "3")
        assert report["grid_n"] == 58  # largest n with n^3 within the budget
        assert report["value_exact"] == "1/2"
        assert report["feasible"] is True

    def test_scaled_down_certificate_fails(self, capsys):
        code, out, _ = run(
            capsys,
            "certify", "--sum-threshold", "0.5", "--k", "2", "--scale", "0.5",
            "--format", "json",
        )
        assert code == 4
        report = json.loads(out)
        assert report["feasible"] is False
        assert report["worst_violation_exact"] == "1/2"
        assert report["transforms"] == ["scale:1/2"]

    def test_transform_order(self, capsys):
        report = run_json(
            capsys,
            "certify", "--sum-threshold", "0.5", "--k", "2",
            "--scale", "1", "--symmetrize", "--clamp", "--monotone",
        )
        assert report["transforms"] == ["scale:1", "symmetrize", "clamp", "monotone"]
        assert report["feasible"] is True

    def test_primal_comparison(self, capsys):
        report = run_json(
            capsys,
            "certify", "--sum-threshold", "0.5", "--k", "2", "--primal-n", "32",
        )
        assert report["primal_lower"] == pytest.approx(15 / 32)
        assert report["primal_n"] == 32
        assert report["weak_duality_ok"] is True

    def test_bad_grid_n(self, capsys):
        code, _, _ = run(
            capsys, "certify", "--sum-threshold", "0.5", "--k", "2", "--grid-n", "1"
        )
        assert code == 2

    def test_bad_threshold(self, capsys):
        code, _, _ = run(capsys, "certify", "--sum-threshold", "0", "--k", "2")
        assert code == 2


class TestWorstCase:
    def test_samples_file(self, capsys, tmp_path):
        out_path = tmp_path / "samples.csv"
        report = run_json(
            capsys,
            "worst-case", "--t", "0.25", "--count", "500", "--seed", "9",
            "--out", str(out_path),
        )
        lines = out_path.read_text().splitlines()
        assert lines[0] == "u1,u2"
        assert len(lines) == 501
        pts = np.array([[float(a) for a in line.split(",")] for line in lines[1:]])
        sums = pts.sum(axis=1)
        off = np.minimum(np.abs(sums - 0.25), np.abs(sums - 1.25))
        assert off.max() <= 1e-12
        sidecar = json.loads((tmp_path / "samples.csv.json").read_text())
        assert sidecar["samples_path"] == str(out_path)
        assert sidecar["count"] == 500
        assert report["sidecar_path"] == str(out_path) + ".json"

    def test_rerun_is_byte_identical(self, capsys, tmp_path):
        args = [
            "worst-case", "--t", "0.1", "--count", "200", "--seed", "4",
            "--out", str(tmp_path / "a.csv"),
        ]
        assert main(args) == 0
        first = (tmp_path / "a.csv").read_bytes()
        first_side = (tmp_path / "a.csv.json").read_bytes()
        out1 = capsys.readouterr().out
        assert main(args) == 0
        assert (tmp_path / "a.csv").read_bytes() == first
        assert (tmp_path / "a.csv.json").read_bytes() == first_side
        assert capsys.readouterr().out == out1

    def test_bad_level(self, capsys, tmp_path):
        code, _, _ = run(
            capsys,
            "worst-case", "--t", "1.5", "--count", "10", "--seed", "0",
            "--out", str(tmp_path / "x.csv"),
        )
        assert code == 2


class TestValidate:
    def test_average_rule_passes_on_its_extremal_copula(self, capsys):
        report = run_json(
            capsys,
            "validate", "--rule", "avg2", "--copula", "extremal:0.05",
            "--epsilon", "0.05", "--count", "20000", "--seed", "1",
        )
        assert report["verdict"] == "PASS"
        assert abs(report["rate"] - 0.05) < 2 * report["band"]

    def test_understated_alpha_fails(self, capsys):
        report = run_json(
            capsys,
            "validate", "--rule", "scaled:0.9",
            "--copula", "extremal:0.0555555555555", "--epsilon", "0.05",
            "--count", "100000", "--seed", "3",
        )
        assert report["verdict"] == "FAIL"
        assert report["rate"] > 0.05 + report["band"]

    def test_independence_bonferroni(self, capsys):
        report = run_json(
            capsys,
            "validate", "--rule", "bonferroni", "--copula", "independence",
            "--epsilon", "0.05", "--count", "20000", "--seed", "2",
        )
        assert report["verdict"] == "PASS"

    def test_ruger_needs_order_flag(self, capsys):
        code, _, err = run(
            capsys,
            "validate", "--rule", "ruger", "--copula", "independence",
            "--epsilon", "0.05", "--count", "100", "--seed", "0",
        )
        assert code == 2
        assert "--order" in err

    def test_grid_copula_source(self, capsys, tmp_path):
        path = tmp_path / "copula.json"
        path.write_text(json.dumps(GridCopula.from_permutation([3, 2, 1, 0]).to_json()))
        report = run_json(
            capsys,
            "validate", "--rule", "avg2", "--copula", f"grid:{path}",
            "--epsilon", "0.1", "--count", "5000", "--seed", "5",
            "--partitions", "4",
        )
        assert report["verdict"] == "PASS"
        assert report["partitions"] == 4

    def test_grid_copula_bad_marginals(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"k": 2, "n": 2, "mass": [0.5, 0.3, 0.1, 0.1]}))
        code, _, err = run(
            capsys,
            "validate", "--rule", "avg2", "--copula", f"grid:{path}",
            "--epsilon", "0.1", "--count", "100", "--seed", "0",
        )
        assert code == 2
        assert "marginals" in err

    def test_grid_copula_missing_file(self, capsys, tmp_path):
        code, _, _ = run(
            capsys,
            "validate", "--rule", "avg2", "--copula", f"grid:{tmp_path / 'no.json'}",
            "--epsilon", "0.1", "--count", "100", "--seed", "0",
        )
        assert code == 2

    def test_unknown_copula(self, capsys):
        code, _, err = run(
            capsys,
            "validate", "--rule", "avg2", "--copula", "comonotone",
            "--epsilon", "0.1", "--count", "100", "--seed", "0",
        )
        assert code == 2

    def test_bad_epsilon(self, capsys):
        code, _, _ = run(
            capsys,
            "validate", "--rule", "avg2", "--copula", "independence",
            "--epsilon", "1.5", "--count", "100", "--seed", "0",
        )
        assert code == 2

    def test_stdout_reruns_identically(self, capsys):
        args = [
            "validate", "--rule", "hommel", "--copula", "independence",
            "--epsilon", "0.05", "--count", "5000", "--seed", "8",
            "--format", "json",
        ]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        assert capsys.readouterr().out == first


class TestSchema:
    def schema(self):
        jsonschema = pytest.importorskip("jsonschema")
        import importlib.resources as resources

        text = (resources.files("pvmerge") / "schemas" / "report.schema.json").read_text()
        return jsonschema, json.loads(text)

    def test_all_commands_validate(self, capsys, tmp_path):
        jsonschema, schema = self.schema()
        reports = [
            run_json(capsys, "merge", "--rule", "avg2", "0.1", "0.3"),
            run_json(capsys, "ucp", "--sum-threshold", "0.5", "--n", "8"),
            run_json(capsys, "certify", "--sum-threshold", "0.5", "--k", "2",
                     "--grid-n", "11"),
            run_json(capsys, "worst-case", "--t", "0.1", "--count", "10",
                     "--seed", "0", "--out", str(tmp_path / "s.csv")),
            run_json(capsys, "validate", "--rule", "avg2", "--copula",
                     "independence", "--epsilon", "0.1", "--count", "100",
                     "--seed", "0"),
        ]
        for report in reports:
            jsonschema.validate(report, schema)

    def test_schema_rejects_wrong_version(self, capsys):
        jsonschema, schema = self.schema()
        report = run_json(capsys, "merge", "--rule", "avg2", "0.1", "0.3")
        report["schema_version"] = 99
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(report, schema)
