import os
import json
import math

import pytest

from Config import ConfigValidationError
from Physics.Drive import kick_angle
from System.RunConfig import RunConfig, validate_config, load_run_config, env_overrides, flag_overrides
from System.RunConfig import REPO_DIR

TEMPLATE_DIR = os.path.join(REPO_DIR, "Config", "Templates")


def test_defaults_follow_paper_preset():
    run_config, errors = validate_config(text="master_seed = 1", environ={})
    assert errors == []
    assert isinstance(run_config, RunConfig)
    assert run_config.preset == "paper"
    assert run_config.experiment == "fock-fluorescence"
    assert run_config.params.N_max == 9
    assert run_config.params.N_trunc == 12
    assert run_config.params.chi == pytest.approx(2 * math.pi * 5.25)
    assert kick_angle(run_config.comb) == pytest.approx(0.5 * math.pi)
    assert run_config.workers == 1
    assert run_config.integrator == "magnus"


def test_fast_preset():
    run_config = load_run_config(text="master_seed = 1", preset="fast", environ={})
    assert run_config.params.N_max == 4
    assert run_config.n_trajectories == 32
    assert run_config.section("dephasing")["use_wigner"] is False


def test_paper_presets_resolve():
    run_config, errors = validate_config(text="master_seed = 1", preset="paper", environ={})
    assert errors == []
    assert run_config.params.T_q == pytest.approx(0.023)
    tabulated = load_run_config(text="master_seed = 1", preset="paper_tabulated_tq", environ={})
    assert tabulated.params.T_q == pytest.approx(0.022)


def test_three_quarter_kick_preset():
    run_config = load_run_config(text="master_seed = 1", preset="paper_kick_3pi4", environ={})
    assert kick_angle(run_config.comb) == pytest.approx(0.75 * math.pi)
    assert run_config.params.N_max == 9


def test_missing_seed_is_an_error():
    run_config, errors = validate_config(text="preset = fast", environ={})
    assert run_config is None
    assert any(error.startswith("master_seed") for error in errors)


def test_unknown_preset():
    _, errors = validate_config(text="master_seed = 1", preset="nonexistent", environ={})
    assert any("unknown preset" in error for error in errors)


def test_every_problem_is_reported():
    text = "master_seed = 1\nworkers = 0\nbogus = 3\n[params]\neta = 2.0\n"
    run_config, errors = validate_config(text=text, environ={})
    assert run_config is None
    assert len(errors) == 3
    assert any(error.startswith("workers") for error in errors)
    assert any(error.startswith("[params] eta") for error in errors)
    assert any(error == "bogus: unknown key" for error in errors)


def test_truncation_below_photon_range():
    _, errors = validate_config(text="master_seed = 1\n[params]\nn_max = 9\nn_trunc = 5\n", environ={})
    assert errors == ["[params] n_trunc: must be at least n_max (5 < 9)"]


def test_photon_numbers_within_range():
    text = "master_seed = 1\n[fock_fluorescence]\nphoton_numbers = 0, 12\n"
    _, errors = validate_config(text=text, environ={})
    assert len(errors) == 1 and errors[0].startswith("[fock_fluorescence] photon_numbers")


def test_confidence_levels_above_one_half():
    _, errors = validate_config(text="master_seed = 1\n[confidence_time]\nlevels = 0.4, 0.9\n", environ={})
    assert errors == ["[confidence_time] levels: 0.4 outside (0.5, 1)"]


def test_environment_overrides():
    environ = {"COMBCONDUCTOR_WORKERS": "4", "COMBCONDUCTOR_PARAMS__ETA": "0.2",
               "COMBCONDUCTOR_RATES__THETAS_PI": "0.5, 1.0", "HOME": "/root"}
    overrides = env_overrides(environ)
    assert overrides["workers"] == "4"
    assert overrides["params"]["eta"] == "0.2"
    assert overrides["rates"]["thetas_pi"] == ["0.5", "1.0"]
    assert "home" not in overrides

    run_config = load_run_config(text="master_seed = 1", environ=environ)
    assert run_config.workers == 4
    assert run_config.params.eta == pytest.approx(0.2)
    assert run_config.section("rates")["thetas_pi"] == [0.5, 1.0]


def test_flags_override_environment():
    environ = {"COMBCONDUCTOR_WORKERS": "4", "COMBCONDUCTOR_MASTER_SEED": "3"}
    run_config = load_run_config(text="master_seed = 1", environ=environ, workers=2)
    assert run_config.workers == 2
    assert run_config.master_seed == 3
    assert flag_overrides(seed=5) == {"master_seed": "5"}


def test_load_raises_with_all_errors():
    with pytest.raises(ConfigValidationError) as error:
        load_run_config(text="workers = 0", environ={})
    assert len(error.value.errors) == 2


def test_resolved_config_round_trip(tmp_path):
    run_config = load_run_config(text="master_seed = 7\nexperiment = rates", preset="fast", environ={})
    path = run_config.write(str(tmp_path / "resolved.config"))
    reloaded = load_run_config(config_file=path, environ={})
    assert reloaded.master_seed == 7
    assert reloaded.experiment == "rates"
    assert reloaded.params.to_dict() == run_config.params.to_dict()
    assert reloaded.experiment_section["thetas_pi"] == [0.25, 0.5, 1.0]


def test_config_hash_depends_on_content():
    first = load_run_config(text="master_seed = 7", environ={})
    again = load_run_config(text="master_seed = 7", environ={})
    other = load_run_config(text="master_seed = 8", environ={})
    assert first.config_hash() == again.config_hash()
    assert first.config_hash() != other.config_hash()


def test_templates_are_valid():
    for name in sorted(os.listdir(TEMPLATE_DIR)):
        _, errors = validate_config(config_file=os.path.join(TEMPLATE_DIR, name), seed=1, environ={})
        assert errors == [], name


def test_json_config_is_checked_against_schema(tmp_path):
    path = str(tmp_path / "run.json")
    with open(path, "w") as fh:
        json.dump({"master_seed": 1, "preset": "fast", "colour": "blue"}, fh)
    _, errors = validate_config(config_file=path, environ={})
    assert any("colour" in error for error in errors)


def test_json_config_values(tmp_path):
    path = str(tmp_path / "run.json")
    with open(path, "w") as fh:
        json.dump({"master_seed": 1, "preset": "fast", "workers": 3, "comb": {"theta_pi": 1.0}}, fh)
    run_config = load_run_config(config_file=path, environ={})
    assert run_config.workers == 3
    assert kick_angle(run_config.comb) == pytest.approx(math.pi)
