import json
from pathlib import Path

import numpy as np
import pytest

from rgvcodes.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = {
    "channel": {"W": [[0.9, 0.1], [0.1, 0.9]]},
    "input": {"P": [0.5, 0.5]},
    "metric": {"kind": "ml"},
    "distance": {"kind": "bhattacharyya"},
    "delta_cap": 0.1,
    "delta": 0.01,
    "rate": {"grid": [0.02, 0.05]},
}


def dump(doc):
    return json.dumps(doc, indent=2)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = load_config(str(path))
    assert cfg.rates and all(r > 0 for r in cfg.rates)
    assert cfg.p.sum() == pytest.approx(1.0)


def test_parse_base():
    cfg = parse_config(dump(BASE))
    assert cfg.rates == [0.02, 0.05]
    assert cfg.d.name == "bhattacharyya"
    assert cfg.n is None


def test_rate_grid_object_and_code_section():
    doc = dict(BASE, rate={"grid": {"start": 0.01, "stop": 0.05, "num": 5}}, code={"n": 12})
    cfg = parse_config(dump(doc))
    np.testing.assert_allclose(cfg.rates, [0.01, 0.02, 0.03, 0.04, 0.05])
    assert cfg.type_for(12).counts == (6, 6)
    assert cfg.messages(12) == round(np.exp(12 * 0.01))


def test_symmetrize_flag():
    doc = dict(BASE, metric={"kind": "additive", "table": [[0.0, -1.0], [-1.5, 0.2]]},
               distance={"kind": "chernoff", "s": 0.3, "symmetrize": True})
    assert parse_config(dump(doc)).d.symmetric


@pytest.mark.parametrize("mutate, key", [
    (lambda d: d["channel"].update(W=[[0.5, 0.4], [0.1, 0.9]]), "W"),
    (lambda d: d["input"].update(P=[0.5, 0.3, 0.2]), "P"),
    (lambda d: d["metric"].update(kind="magic"), "metric"),
    (lambda d: d["distance"].update(kind="euclid"), "distance"),
    (lambda d: d.update(delta=-1), "delta"),
    (lambda d: d.update(rate={"grid": [0.1, -0.2]}), "rate"),
    (lambda d: d.update(code={"n": 0}), "n"),
])
def test_errors_point_at_the_line(mutate, key):
    doc = json.loads(json.dumps(BASE))
    doc["code"] = {"n": 8, "m": 2}
    mutate(doc)
    text = dump(doc)
    with pytest.raises(ConfigError) as err:
        parse_config(text, "x.json")
    line = next(i for i, ln in enumerate(text.splitlines(), 1) if f'"{key}"' in ln)
    assert err.value.line == line
    assert f"x.json:{line}:" in str(err.value)


def test_invalid_json_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config('{\n  "channel": {"W": [[1]]},\n  oops\n}')
    assert err.value.line == 3


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/config.json")


def test_missing_section():
    doc = dict(BASE)
    del doc["metric"]
    with pytest.raises(ConfigError, match="metric"):
        parse_config(dump(doc))
