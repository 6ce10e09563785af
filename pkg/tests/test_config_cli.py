"""Config files and the command-line surface (exit codes, CSV artifacts,
determinism of outputs)."""

import filecmp
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

import sbpq
from sbpq.cli import main
from sbpq.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
REENTRANT = CONFIG_DIR / "2s5c_rho96_99.yaml"
MM1 = CONFIG_DIR / "mm1_rho50.yaml"


class TestConfigLoading:
    def test_bundled_reentrant_config(self):
        cfg = sbpq.load_config(REENTRANT)
        assert cfg.spec.num_stations == 2 and cfg.spec.num_classes == 5
        assert cfg.policy.order == ((4, 2, 0), (1, 3))
        assert cfg.spec.mean_service == pytest.approx([0.48, 0.33, 0.24, 0.66, 0.24])
        assert cfg.spec.scv_service == pytest.approx(
            [1 / 0.95, 1 / 0.6, 1 / 0.95, 1 / 0.6, 1 / 0.95])
        assert cfg.spec.stability_constraints == ((1, 4),)
        assert cfg.sha256
        assert sbpq.validate_spec(cfg.spec) == []

    def test_all_bundled_configs_validate(self):
        for path in sorted(CONFIG_DIR.glob("*.yaml")):
            cfg = sbpq.load_config(path)
            assert sbpq.validate_spec(cfg.spec) == [], path.name

    @pytest.mark.parametrize("mutation,fragment", [
        ("policy:\n  - [5, 3, 1]\n  - [2, 4]", None),           # baseline sanity
        ("policy:\n  - [5, 3]\n  - [2, 4]", "policy"),          # missing class
        ("policy:\n  - [5, 3, 1]\n  - [2, 9]", "policy"),       # unknown class
    ])
    def test_policy_errors(self, tmp_path, mutation, fragment):
        text = REENTRANT.read_text()
        base = text[:text.index("policy:")]
        rest = text[text.index("# stability"):]
        mutated = tmp_path / "cfg.yaml"
        mutated.write_text(base + mutation + "\n" + rest)
        if fragment is None:
            sbpq.load_config(mutated)
        else:
            with pytest.raises((ConfigError, sbpq.PolicyError)):
                cfg = sbpq.load_config(mutated)
                sbpq.canonicalize(cfg.spec, cfg.policy)

    def test_missing_fields_have_paths(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("stations: [1]\nclasses:\n  - station: 1\n")
        with pytest.raises(ConfigError, match=r"classes\[1\].mean_service"):
            sbpq.load_config(bad)

    def test_gamma_shape_equivalent_to_scv(self, tmp_path):
        a = tmp_path / "a.yaml"
        a.write_text("""\
stations: [1]
classes:
  - {station: 1, arrival_rate: 1.0, mean_service: 0.5,
     arrival_dist: {family: gamma, shape: 0.75},
     dist: {family: gamma, scv: 2.0}}
routing: [[0]]
policy: [[1]]
""")
        cfg = sbpq.load_config(a)
        assert cfg.spec.scv_arrival[0] == pytest.approx(4 / 3)
        assert cfg.spec.scv_service[0] == pytest.approx(2.0)


class TestCommands:
    def test_validate_ok(self, capsys):
        assert main(["validate", str(REENTRANT)]) == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_bad_routing(self, tmp_path, capsys):
        text = REENTRANT.read_text().replace("- [0, 1, 0, 0, 0]",
                                             "- [0, 1, 0, 0.3, 0]")
        bad = tmp_path / "bad.yaml"
        bad.write_text(text)
        assert main(["validate", str(bad)]) == 1
        assert "routing[1]" in capsys.readouterr().out

    def test_validate_unknown_policy_class(self, tmp_path, capsys):
        text = REENTRANT.read_text().replace("- [2, 4]", "- [2, 7]")
        bad = tmp_path / "bad.yaml"
        bad.write_text(text)
        assert main(["validate", str(bad)]) == 1

    def test_analyze_outputs(self, tmp_path, capsys):
        out = tmp_path / "an"
        assert main(["analyze", str(REENTRANT), "-o", str(out)]) == 0
        rows = (out / "constants.csv").read_text().splitlines()
        assert rows[0] == ("class_label,canonical_index,role,sigma2,"
                           "one_minus_wkk,mean_estimate,geom_p")
        by_label = {r.split(",")[0]: r.split(",") for r in rows[1:]}
        assert float(by_label["1"][5]) == pytest.approx(20.08, abs=0.01)
        assert float(by_label["4"][5]) == pytest.approx(167.75, abs=0.01)
        assert by_label["3"][2] == "H"
        dump = json.loads((out / "matrices.json").read_text())
        assert dump["summary"]["cycle_time_estimate"] == pytest.approx(187.8289, abs=1e-3)
        for key in ("A", "Q", "R", "w", "u", "diagnostics"):
            assert key in dump["matrices"]
        assert dump["matrices"]["diagnostics"]["p_matrix"] == "yes"
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["outputs"]) == {"constants.csv", "matrices.json"}
        assert manifest["config_sha256"]

    def test_analyze_mm1(self, tmp_path):
        out = tmp_path / "an"
        assert main(["analyze", str(MM1), "-o", str(out)]) == 0
        rows = (out / "constants.csv").read_text().splitlines()
        assert float(rows[1].split(",")[5]) == pytest.approx(1.0, rel=1e-9)

    def test_analyze_assumption_failure_exit_codes(self, tmp_path):
        # a config whose A_H is singular: plain exit 0 with a status tag,
        # exit 2 under --fail-on-assumption
        p = (1 / 1.2) * (1 / 0.9) / (0.8 * 20 * 20)
        cfg = tmp_path / "singular.yaml"
        cfg.write_text("""\
stations: [1, 2]
classes:
  - {station: 1, arrival_rate: 0.2, mean_service: 0.05,
     arrival_dist: {family: exponential}, dist: {family: exponential}}
  - {station: 2, arrival_rate: 0.2, mean_service: 0.05,
     arrival_dist: {family: exponential}, dist: {family: exponential}}
  - {station: 1, mean_service: 1.2, dist: {family: exponential}}
  - {station: 2, mean_service: 0.9, dist: {family: exponential}}
routing:
  - [0, 0, 0, 0.8]
  - [0, 0, %.17g, 0]
  - [0, 0, 0, 0]
  - [0, 0, 0, 0]
policy:
  - [3, 1]
  - [4, 2]
""" % p)
        assert main(["analyze", str(cfg), "-o", str(tmp_path / "o1")]) == 0
        assert main(["analyze", str(cfg), "-o", str(tmp_path / "o2"),
                     "--fail-on-assumption"]) == 2

    def test_simulate_outputs_and_determinism(self, tmp_path):
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        flags = ["simulate", str(MM1), "--arrivals", "2e4", "--reps", "2",
                 "--seed", "5"]
        assert main(flags + ["-o", str(out1)]) == 0
        assert main(flags + ["-o", str(out2)]) == 0
        for name in ("summary.csv", "hist_1.csv", "cycletime.csv"):
            assert (out1 / name).exists()
            assert filecmp.cmp(out1 / name, out2 / name, shallow=False), name
        header = (out1 / "summary.csv").read_text().splitlines()[0]
        assert header == "class,mean,ci,idle_frac,beta_exact"
        hist_header = (out1 / "hist_1.csv").read_text().splitlines()[0]
        assert hist_header == "value,probability,geom_reference"
        cyc = (out1 / "cycletime.csv").read_text().splitlines()
        assert cyc[0] == "mean,ci,count"

    def test_simulate_joint_flag(self, tmp_path):
        out = tmp_path / "s"
        assert main(["simulate", str(REENTRANT), "--arrivals", "2e4",
                     "--reps", "2", "--seed", "5", "--joint", "1,4",
                     "-o", str(out)]) == 0
        assert (out / "joint_1_4.csv").exists()
        lines = (out / "summary.csv").read_text().splitlines()
        assert lines[0].startswith("class,")
        assert any(line.startswith("IQR(1;4)") for line in lines)
        joint = np.loadtxt(out / "joint_1_4.csv", delimiter=",", skiprows=1)
        assert joint[:, 2].sum() == pytest.approx(1.0, abs=1e-9)

    def test_optimize_ranking_csv(self, tmp_path):
        out = tmp_path / "opt"
        assert main(["optimize", str(REENTRANT), "-o", str(out)]) == 0
        lines = (out / "ranking.csv").read_text().splitlines()
        assert lines[0] == "policy,estimate_or_tag,group_id"
        assert len(lines) == 13
        first = lines[1].split(",")
        assert first[0].startswith("{(")
        estimates = [float(line.rsplit(",", 2)[1]) for line in lines[1:]]
        assert estimates == sorted(estimates)
        groups = [int(line.rsplit(",", 2)[2]) for line in lines[1:]]
        assert groups == sorted(groups) and groups[-1] == 4

    def test_idle_check_clockwork_exact(self, tmp_path):
        cfg = tmp_path / "dd1.yaml"
        cfg.write_text("""\
stations: [1]
classes:
  - {station: 1, arrival_rate: 1.0, mean_service: 0.5,
     arrival_dist: {family: deterministic}, dist: {family: deterministic}}
routing: [[0]]
policy: [[1]]
""")
        out = tmp_path / "idle"
        assert main(["idle-check", str(cfg), "--arrivals", "1e4", "--reps", "2",
                     "--seed", "1", "-o", str(out)]) == 0
        rows = (out / "idle_check.csv").read_text().splitlines()
        assert rows[0] == "class,beta_exact,idle_sim,ci,verdict"
        cls, beta, sim, ciw, verdict = rows[1].split(",")
        assert float(beta) == 0.5 and float(sim) == 0.5
        assert verdict == "pass"

    def test_idle_check_reentrant(self, tmp_path):
        out = tmp_path / "idle"
        assert main(["idle-check", str(CONFIG_DIR / "2s5c_rho90_95.yaml"),
                     "--arrivals", "5e4", "--reps", "3", "--seed", "2",
                     "-o", str(out)]) == 0
        rows = (out / "idle_check.csv").read_text().splitlines()[1:]
        assert len(rows) == 5
        assert all(r.endswith("pass") for r in rows)
