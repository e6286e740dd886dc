import json

import pytest

from mabaxxx.cli import DEFAULT_MODEL, ConfigError, RunConfig, main

SMALL = {"model": dict(DEFAULT_MODEL, theta=[[0.31, 0.12], [-0.54, 0.43]]), "seed": 4,
         "caps": {"izergin_max_n": 2, "izergin_draws": 3}}


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(SMALL))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_config_round_trip_is_byte_identical():
    cfg = RunConfig.from_dict(SMALL)
    text = cfg.dumps()
    again = RunConfig.loads(text)
    assert again.dumps() == text
    assert again.digest() == cfg.digest()


@pytest.mark.parametrize("patch,where", [
    ({"model": dict(DEFAULT_MODEL, kappa="1+2j")}, "$.model.kappa"),
    ({"model": dict(DEFAULT_MODEL, theta=[[0.1, 0.2], [0.3]])}, "$.model.theta[1]"),
    ({"seed": -1}, "$.seed"),
    ({"tolerances": {"oracle": 0}}, "$.tolerances.oracle"),
    ({"bogus": 1}, "$.bogus"),
])
def test_config_errors_name_the_field(patch, where):
    data = dict(SMALL, **patch)
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict(data)
    assert str(info.value).startswith(where)


def test_degenerate_twist_is_config_error(tmp_path, capsys):
    model = dict(DEFAULT_MODEL, kappa_tilde=[1.0, 0.0], kappa=[1.0, 0.0],
                 kappa_plus=[0.0, 0.0], kappa_minus=[0.0, 0.0])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"model": model}))
    code, _, err = run(capsys, "verify-oracle", "--config", str(path))
    assert code == 2 and "config error at $.model" in err


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _, err = run(capsys, "solve-bethe", "--config", str(path))
    assert code == 2 and "config error" in err


def test_solve_and_scalar_product(small_cfg, tmp_path, capsys):
    code, out, _ = run(capsys, "solve-bethe", "--config", small_cfg, "--no-timing")
    rep = json.loads(out)
    assert code == 0 and rep["pass"] and rep["data"]["coverage"] == 1.0
    assert "wall_time" not in rep
    u = tmp_path / "u.json"
    u.write_text(json.dumps(rep["data"]["solutions"][0]))
    v = tmp_path / "v.json"
    v.write_text(json.dumps([[0.2, 0.9], [-1.1, 0.3]]))
    code, out, _ = run(capsys, "scalar-product", "--config", small_cfg, "--u", str(u), "--v", str(v))
    rep = json.loads(out)
    assert code == 0 and rep["pass"] and "wall_time" in rep
    assert len(rep["records"]) == 6
    code, out, _ = run(capsys, "norm", "--config", small_cfg, "--u", str(u))
    assert code == 0


def test_off_shell_scalar_product_fails(small_cfg, tmp_path, capsys):
    u = tmp_path / "u.json"
    u.write_text(json.dumps([[0.1, 0.2], [0.7, -0.3]]))
    v = tmp_path / "v.json"
    v.write_text(json.dumps([[0.5, 1.2], [-0.4, -0.9]]))
    code, out, err = run(capsys, "scalar-product", "--config", small_cfg,
                         "--u", str(u), "--v", str(v))
    assert code == 1
    assert "NotOnShell" in out and "FAIL" in err


def test_missing_roots_is_config_error(small_cfg, capsys):
    code, _, err = run(capsys, "norm", "--config", small_cfg)
    assert code == 2


@pytest.mark.parametrize("command", ["verify-izergin", "verify-oracle", "verify-appendices",
                                     "spectrum-check"])
def test_commands_pass_and_repeat(small_cfg, tmp_path, capsys, command):
    out_path = tmp_path / "r.json"
    code, first, _ = run(capsys, command, "--config", small_cfg, "--no-timing",
                         "--json-out", str(out_path))
    assert code == 0, first
    assert out_path.read_text() == first
    _, second, _ = run(capsys, command, "--config", small_cfg, "--no-timing")
    assert first == second
