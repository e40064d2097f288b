import pytest

from symplab import config as cfg
from symplab.errors import ConfigError

DEFAULTS = {"seed": 0, "tol": 1e-10, "name": "x", "flags": [1], "inner": {"steps": 10}, "map": {"type": "standard"}}


def test_merge_keeps_defaults_and_coerces_ints_to_floats():
    out = cfg.merge(DEFAULTS, {"tol": 1, "inner": {"steps": 5}})
    assert out["tol"] == 1.0 and isinstance(out["tol"], float)
    assert out["inner"] == {"steps": 5} and out["seed"] == 0
    assert DEFAULTS["inner"]["steps"] == 10


def test_unknown_key_reports_line():
    text = 'seed = 1\n\n[inner]\nstepz = 3\n'
    with pytest.raises(ConfigError) as info:
        cfg.merge(DEFAULTS, cfg.parse_text(text), text)
    assert info.value.line == 4 and info.value.field == "inner.stepz"
    assert "line 4" in str(info.value)


def test_type_mismatch():
    text = 'seed = "one"\n'
    with pytest.raises(ConfigError) as info:
        cfg.merge(DEFAULTS, cfg.parse_text(text), text)
    assert info.value.field == "seed" and info.value.line == 1
    with pytest.raises(ConfigError):
        cfg.merge(DEFAULTS, {"seed": True})


def test_syntax_error_has_line():
    with pytest.raises(ConfigError) as info:
        cfg.parse_text("seed = 1\ntol = = 2\n")
    assert info.value.line == 2


def test_freeform_table_replaced_wholesale():
    out = cfg.merge(DEFAULTS, {"map": {"type": "cat", "matrix": [[2, 1], [1, 1]]}})
    assert out["map"] == {"type": "cat", "matrix": [[2, 1], [1, 1]]}
    with pytest.raises(ConfigError):
        cfg.merge(DEFAULTS, {"map": 3})


def test_dumps_round_trip():
    conf = dict(DEFAULTS, optional=None)
    back = cfg.parse_text(cfg.dumps(conf))
    assert "optional" not in back
    assert cfg.merge(DEFAULTS, back) == DEFAULTS
