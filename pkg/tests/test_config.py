import pytest

from drift_spectra.config import build_config, load_config
from drift_spectra.errors import ConfigError


def _write(tmp_path, text):
    path = tmp_path / "job.cfg"
    path.write_text(text)
    return str(path)


def test_minimal_drift_config_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, """
[problem]
kind = "drift"
domain = 0, 1
phi = "x"
n = 500
num_eigs = 3
"""))
    assert cfg.kind == "drift"
    assert cfg.domain == (0.0, 1.0)
    assert cfg.phi == "x" and cfg.f is None
    assert cfg.tol == 1e-8
    assert cfg.solver == "auto"
    assert cfg.seed == 42


def test_epsilon_list_descending(tmp_path):
    cfg = load_config(_write(tmp_path, """
[problem]
kind = "converge"
domain = 0, 1
phi = "x"
epsilon = 0.2, 0.1, 0.05, 0.025
"""))
    assert cfg.epsilon == [0.2, 0.1, 0.05, 0.025]


def test_both_phi_and_f_rejected(tmp_path):
    with pytest.raises(ConfigError, match="exactly one"):
        load_config(_write(tmp_path, """
[problem]
kind = "drift"
domain = 0, 1
phi = "x"
f = "1"
"""))


def test_unknown_key_is_fatal(tmp_path):
    with pytest.raises(ConfigError, match="epsilom"):
        load_config(_write(tmp_path, """
[problem]
kind = "converge"
domain = 0, 1
phi = "x"
epsilom = 0.2, 0.1, 0.05, 0.025
"""))


def test_malformed_number(tmp_path):
    with pytest.raises(ConfigError, match="malformed number"):
        load_config(_write(tmp_path, """
[problem]
kind = "drift"
domain = 0, oops
phi = "x"
"""))


def test_missing_required_keys():
    with pytest.raises(ConfigError, match="kind"):
        build_config({"domain": [0, 1]})
    with pytest.raises(ConfigError, match="domain"):
        build_config({"kind": "drift", "phi": "x"})
    with pytest.raises(ConfigError, match="phi/f"):
        build_config({"kind": "drift", "domain": [0, 1]})


def test_weight_forbidden_for_derived_jobs():
    with pytest.raises(ConfigError, match="derives its weight"):
        build_config({"kind": "prop2", "domain": [0, 1], "phi": "x"})


def test_epsilon_structure_validation():
    base = {"kind": "converge", "domain": [0, 1], "phi": "x"}
    with pytest.raises(ConfigError, match="at least 4"):
        build_config({**base, "epsilon": [0.2, 0.1, 0.05]})
    with pytest.raises(ConfigError, match="descending"):
        build_config({**base, "epsilon": [0.025, 0.05, 0.1, 0.2]})
    with pytest.raises(ConfigError, match="geometric"):
        build_config({**base, "epsilon": [0.2, 0.1, 0.06, 0.025]})
    with pytest.raises(ConfigError, match="single epsilon"):
        build_config({"kind": "thin", "domain": [0, 1], "f": "1",
                      "epsilon": [0.2, 0.1]})


def test_bad_domain_and_solver():
    with pytest.raises(ConfigError, match="a < b"):
        build_config({"kind": "prop2", "domain": [1, 0]})
    with pytest.raises(ConfigError, match="solver"):
        build_config({"kind": "prop2", "domain": [0, 1], "solver": "magic"})
    with pytest.raises(ConfigError, match="convention"):
        build_config({"kind": "gapcheck", "domain": [0, 1], "f": "1",
                      "convention": "mystery"})


def test_section_and_line_errors(tmp_path):
    with pytest.raises(ConfigError, match="outside of a section"):
        load_config(_write(tmp_path, 'kind = "drift"\n'))
    with pytest.raises(ConfigError, match="unknown section"):
        load_config(_write(tmp_path, "[jobs]\n"))
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(_write(tmp_path, '[problem]\nn = 3\nn = 4\n'))
    with pytest.raises(ConfigError, match="key = value"):
        load_config(_write(tmp_path, "[problem]\nnonsense line\n"))
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "absent.cfg"))


def test_integer_validation():
    with pytest.raises(ConfigError, match="num_eigs"):
        build_config({"kind": "drift", "domain": [0, 1], "phi": "x",
                      "num_eigs": -1})
    with pytest.raises(ConfigError, match="'nx'"):
        build_config({"kind": "drift", "domain": [0, 1], "phi": "x",
                      "nx": 2.5})
    # num_eigs = 0 is allowed: header-only outputs
    cfg = build_config({"kind": "drift", "domain": [0, 1], "phi": "x",
                        "num_eigs": 0})
    assert cfg.num_eigs == 0


def test_checked_in_configs_load():
    from pathlib import Path
    configs = sorted((Path(__file__).parent.parent / "configs").glob("*.cfg"))
    assert len(configs) >= 8
    for path in configs:
        cfg = load_config(str(path))
        assert cfg.kind


def test_config_echo_roundtrip():
    cfg = build_config({"kind": "thin", "domain": [0, 1], "f": "1",
                        "epsilon": 0.1}, {"csv": "out.csv"})
    echo = cfg.echo()
    assert echo["kind"] == "thin"
    assert echo["epsilon"] == [0.1]
    assert echo["csv_path"] == "out.csv"
