import json

import pytest

from macrostab.cli import main
from macrostab.config import ConfigError, load_config, parse_flat, render_flat


def write_config(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


SCALING_CFG = """
experiment = scaling
model.family = CAT
volumes = 4, 6, 8
master_seed = 7
"""

GAMMA_CFG = """
experiment = gamma
model.family = CAT
model.n_sites = 4
noise.lambda = 0.05
noise.spatial = STAGGERED
noise.temporal = WHITE
noise.intensity = 1.0
trajectories = 16
dt = 0.01
n_steps = 40
store_every = 5
fit.t_lo = 0.05
fit.t_hi = 0.4
master_seed = 11
"""


class TestConfigParsing:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_flat("experiment = scaling\nbogus.key = 1\n")

    def test_comments_and_blanks_ignored(self):
        entries = parse_flat("# header\n\nexperiment = lm  # trailing\n")
        assert entries == {"experiment": "lm"}

    def test_render_round_trip(self):
        entries = parse_flat(SCALING_CFG)
        assert parse_flat(render_flat(entries)) == entries

    def test_odd_volume_for_cat_rejected(self):
        with pytest.raises(ConfigError, match="even"):
            load_config("experiment = scaling\nmodel.family = CAT\nvolumes = 4, 5\n")

    def test_bad_fit_window_rejected(self):
        with pytest.raises(ConfigError, match="t_lo < t_hi"):
            load_config("experiment = gamma\nmodel.family = CAT\n"
                        "fit.t_lo = 0.5\nfit.t_hi = 0.1\n")

    def test_seed_override_lands_in_raw(self):
        config = load_config(SCALING_CFG, seed_override=99)
        assert config.master_seed == 99
        assert config.raw["master_seed"] == "99"


class TestExitCodes:
    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["scaling", "--config", str(tmp_path / "nope.cfg")])
        assert code == 2
        assert "cannot read config" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "experiment = scaling\nmodel.family = NOPE\n")
        assert main(["scaling", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_experiment_mismatch(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SCALING_CFG)
        code = main(["lm", "--config", cfg, "--out", str(tmp_path)])
        assert code == 2
        assert "scaling" in capsys.readouterr().err

    def test_bad_thread_count(self, tmp_path):
        cfg = write_config(tmp_path, SCALING_CFG)
        assert main(["scaling", "--config", cfg, "--threads", "0"]) == 2

    def test_nonconvergence_flag_exits_three(self, tmp_path, capsys):
        # strong coupling drives purity well below 0.7 inside the window
        cfg = write_config(tmp_path, GAMMA_CFG.replace("noise.lambda = 0.05",
                                                       "noise.lambda = 1.0"))
        code = main(["gamma", "--config", cfg, "--out", str(tmp_path / "out")])
        assert code == 3
        assert "purity fell below 0.7" in capsys.readouterr().err


class TestScalingRun:
    def test_end_to_end(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SCALING_CFG)
        out = tmp_path / "out"
        assert main(["scaling", "--config", cfg, "--out", str(out)]) == 0
        assert (out / "scaling.csv").exists()
        assert (out / "scaling_summary.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["experiment"] == "scaling"
        assert manifest["master_seed"] == 7
        assert manifest["summary"]["exponent"] == pytest.approx(2.0, abs=0.01)
        assert manifest["summary"]["class"] == "AFS"
        assert manifest["flags"] == []
        text = capsys.readouterr().out
        assert "scaling.csv" in text

    def test_manifest_echoes_config(self, tmp_path):
        cfg = write_config(tmp_path, SCALING_CFG)
        out = tmp_path / "out"
        main(["scaling", "--config", cfg, "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"] == parse_flat(SCALING_CFG)

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_config(tmp_path, SCALING_CFG)
        out = tmp_path / "out"
        main(["scaling", "--config", cfg, "--out", str(out), "--seed", "42"])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["master_seed"] == 42
        assert manifest["config"]["master_seed"] == "42"


class TestClusterRun:
    def test_product_family_has_cp(self, tmp_path):
        cfg = write_config(tmp_path, """
experiment = cluster
model.family = RANDOM_PRODUCT
model.seed = 3
volumes = 4, 6, 8
epsilon = 0.1, 0.25
""")
        out = tmp_path / "out"
        assert main(["cluster", "--config", cfg, "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        for entry in manifest["summary"]["cp_verdicts"].values():
            assert entry["verdict"] == "HAS_CP"
        assert (out / "cluster.csv").exists()
        assert (out / "cluster_summary.csv").exists()

    def test_cat_family_lacks_cp(self, tmp_path):
        cfg = write_config(tmp_path, """
experiment = cluster
model.family = CAT
volumes = 4, 6, 8
epsilon = 0.1
""")
        out = tmp_path / "out"
        assert main(["cluster", "--config", cfg, "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        entry = manifest["summary"]["cp_verdicts"]["0.10000000000000001"]
        assert entry["verdict"] == "NO_CP"


class TestGammaRun:
    def test_end_to_end_and_thread_determinism(self, tmp_path):
        cfg = write_config(tmp_path, GAMMA_CFG)
        out1 = tmp_path / "t1"
        out4 = tmp_path / "t4"
        assert main(["gamma", "--config", cfg, "--out", str(out1), "--threads", "1"]) == 0
        assert main(["gamma", "--config", cfg, "--out", str(out4), "--threads", "4"]) == 0
        for name in ("gamma.csv", "purity.csv", "gamma_summary.csv"):
            assert (out1 / name).read_bytes() == (out4 / name).read_bytes()
        manifest = json.loads((out1 / "manifest.json").read_text())
        assert manifest["summary"]["gamma_formula"] == pytest.approx(0.04)

    def test_threads_env_var(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, GAMMA_CFG)
        out_env = tmp_path / "env"
        monkeypatch.setenv("MACROSTAB_THREADS", "4")
        assert main(["gamma", "--config", cfg, "--out", str(out_env)]) == 0
        out_ref = tmp_path / "ref"
        monkeypatch.delenv("MACROSTAB_THREADS")
        assert main(["gamma", "--config", cfg, "--out", str(out_ref)]) == 0
        assert ((out_env / "purity.csv").read_bytes()
                == (out_ref / "purity.csv").read_bytes())

    def test_fit_window_validated_against_dt(self, tmp_path, capsys):
        cfg = write_config(tmp_path, GAMMA_CFG.replace("fit.t_lo = 0.05",
                                                       "fit.t_lo = 0.005"))
        assert main(["gamma", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_formula_only_run_with_volumes(self, tmp_path):
        cfg = write_config(tmp_path, """
experiment = gamma
model.family = CAT
noise.lambda = 0.05
noise.spatial = STAGGERED
noise.temporal = WHITE
noise.intensity = 1.0
volumes = 4, 6, 8, 10
""")
        out = tmp_path / "out"
        assert main(["gamma", "--config", cfg, "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["summary"]["fragile"] is True
        assert manifest["summary"]["exponent"] == pytest.approx(2.0, abs=0.05)
        assert not (out / "purity.csv").exists()


class TestLMRun:
    def test_neel_reports_zero_deviation(self, tmp_path):
        cfg = write_config(tmp_path, """
experiment = lm
model.family = NEEL_PLUS
model.n_sites = 6
lm.epsilon = 0.01
""")
        out = tmp_path / "out"
        assert main(["lm", "--config", cfg, "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["summary"]["max_deviation"] < 1e-10
        lines = (out / "lm.csv").read_text().splitlines()
        assert lines[0] == "x,y,deviation"
        assert len(lines) == 1 + 6 * 5  # every ordered pair


class TestCascadeRun:
    def test_cat_single_measurement(self, tmp_path):
        cfg = write_config(tmp_path, """
experiment = cascade
model.family = CAT
model.n_sites = 8
cascade.policy = RANDOM_SITE_Z
cascade.runs = 10
master_seed = 5
""")
        out = tmp_path / "out"
        assert main(["cascade", "--config", cfg, "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["summary"]["median_count"] == 1.0
        lines = (out / "cascade.csv").read_text().splitlines()
        assert len(lines) == 11
        assert all(line.split(",")[3] == "1" for line in lines[1:])
