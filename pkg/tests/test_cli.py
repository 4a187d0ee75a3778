import json

import pytest

from opnet.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RESOURCE,
    EXIT_VERIFY_FAIL,
    main,
    parse_config,
    serialize_config,
)
from opnet.errors import ConfigError

BASE_CONFIG = """\
[domain]
dim = 1
lower = 0.0
upper = 1.0

[kernel]
name = constant
value = 1.0

[parameters]
p = 2
r = 1
gamma = 2.0
Delta = 1.0
delta = 0.25
sigma = 0.2

[run]
seed = 7
samples = 40
"""

EPSILON_CONFIG = """\
[domain]
dim = 1
lower = 0.0
upper = 1.0

[kernel]
name = gaussian
beta = 1.0

[parameters]
p = 2
r = 1
epsilon = 2.0

[run]
seed = 3
samples = 30
family_mode = sample
family_samples = 60
"""


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# --------------------------------------------------------------------------
# config parsing


def test_parse_round_trip():
    cfg = parse_config(BASE_CONFIG)
    assert cfg.gamma == 2.0 and cfg.Delta == 1.0 and cfg.delta == 0.25
    assert cfg.seed == 7
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    # serialization is canonical: a second round trip is byte-identical
    assert serialize_config(again) == serialize_config(cfg)


def test_parse_distinguishes_Delta_from_delta():
    cfg = parse_config(BASE_CONFIG)
    assert cfg.Delta != cfg.delta


def test_parse_lambda_alias():
    cfg = parse_config(BASE_CONFIG.replace("sigma = 0.2", "sigma = 0.2\nlambda = 0.1"))
    assert cfg.lam == 0.1


def test_parse_rejects_incomplete_parameters():
    broken = BASE_CONFIG.replace("gamma = 2.0\n", "")
    with pytest.raises(ConfigError, match="gamma"):
        parse_config(broken)


def test_parse_rejects_epsilon_conflict():
    with pytest.raises(ConfigError, match="conflict"):
        parse_config(BASE_CONFIG.replace("[run]", "epsilon = 1.0\n\n[run]"))


def test_parse_rejects_unknown_field():
    with pytest.raises(ConfigError, match="unknown field"):
        parse_config(BASE_CONFIG + "bogus = 1\n")


def test_parse_rejects_bad_number():
    with pytest.raises(ConfigError, match="not a number"):
        parse_config(BASE_CONFIG.replace("gamma = 2.0", "gamma = two"))


def test_parse_rejects_small_p():
    with pytest.raises(ConfigError, match="p"):
        parse_config(BASE_CONFIG.replace("p = 2", "p = 1"))


# --------------------------------------------------------------------------
# commands and exit codes


def test_missing_config_file_is_config_error(capsys, tmp_path):
    assert main(["verify", str(tmp_path / "absent.ini")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_bound_command(capsys, tmp_path):
    path = write(tmp_path, BASE_CONFIG)
    assert main(["bound", path]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["schema_version"] == 1
    # constant kernel, p = 2: 0 + 2/2 + 0 + 0.25 + 2 * 0.2 = 1.65
    assert payload["breakdown"]["total"] == pytest.approx(1.65)


def test_verify_pass_and_report(capsys, tmp_path):
    cfg = write(tmp_path, BASE_CONFIG)
    out = str(tmp_path / "report.json")
    assert main(["verify", cfg, "--output", out]) == EXIT_OK
    assert "PASS" in capsys.readouterr().out
    report = json.loads(open(out).read())
    assert report["passed"] is True
    assert report["steps_report"]["passed"] is True
    assert report["bound_report"]["passed"] is True


def test_verify_reports_are_byte_identical(tmp_path):
    cfg = write(tmp_path, BASE_CONFIG)
    out = str(tmp_path / "report.json")
    main(["verify", cfg, "--output", out])
    first = open(out, "rb").read()
    main(["verify", cfg, "--output", out])
    assert open(out, "rb").read() == first


def test_verify_forced_failure_exit_code(capsys, tmp_path):
    text = BASE_CONFIG + "debug_bound_scale = 0.001\n"
    cfg = write(tmp_path, text)
    assert main(["verify", cfg]) == EXIT_VERIFY_FAIL
    assert "FAIL" in capsys.readouterr().out


def test_verify_epsilon_mode(capsys, tmp_path):
    cfg = write(tmp_path, EPSILON_CONFIG)
    out = str(tmp_path / "eps.json")
    assert main(["verify", cfg, "--output", out]) == EXIT_OK
    report = json.loads(open(out).read())
    assert report["config"]["gamma"] is not None
    assert report["bound_report"]["certified_total"] <= 2.0 + 1e-12


def test_build_command(capsys, tmp_path):
    cfg = write(tmp_path, BASE_CONFIG)
    out = str(tmp_path / "family")
    assert main(["build", cfg, "--output", out]) == EXIT_OK
    manifest = json.loads(open(out + "/manifest.json").read())
    count = int(manifest["family_count"])
    assert count >= 1
    rows = open(out + "/family.csv").read().strip().splitlines()
    assert len(rows) == count + 1  # header plus one row per member
    images = open(out + "/images.csv").read().strip().splitlines()
    assert len(images) == count + 1


def test_build_cap_is_resource_exit(capsys, tmp_path):
    text = BASE_CONFIG.replace("samples = 40", "samples = 40\nenum_cap = 2")
    cfg = write(tmp_path, text)
    assert main(["build", cfg, "--output", str(tmp_path / "fam")]) == EXIT_RESOURCE
    assert "family too large" in capsys.readouterr().err


def test_sweep_requires_axis(capsys, tmp_path):
    cfg = write(tmp_path, BASE_CONFIG)
    assert main(["sweep", cfg]) == EXIT_CONFIG


def test_sweep_sigma_monotone(capsys, tmp_path):
    cfg = write(tmp_path, BASE_CONFIG)
    out = str(tmp_path / "sweep.csv")
    assert main(["sweep", cfg, "--axis", "sigma",
                 "--values", "0.8,0.4,0.2", "--output", out]) == EXIT_OK
    lines = open(out).read().strip().splitlines()
    assert lines[0].startswith("sigma,certified_total")
    totals = [float(row.split(",")[1]) for row in lines[1:]]
    assert totals == sorted(totals, reverse=True)


def test_sweep_unknown_axis(capsys, tmp_path):
    cfg = write(tmp_path, BASE_CONFIG)
    assert main(["sweep", cfg, "--axis", "bogus", "--values", "1"]) == EXIT_CONFIG
