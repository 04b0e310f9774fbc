import json

import pytest

from silhouette_crf.config import RunConfig, load_config
from silhouette_crf.errors import DataError


def test_defaults_and_partial_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"flow": {"alpha": 0.1}, "bp": {"damping": 0.3}, "seed": 7,
                                "paths": {"out": "x"}}))
    cfg = load_config(path)
    assert cfg.flow.alpha == 0.1 and cfg.flow.iterations == RunConfig().flow.iterations
    assert cfg.bp.damping == 0.3 and cfg.seed == 7 and cfg.paths == {"out": "x"}
    assert cfg.tracker.flow is cfg.flow


def test_round_trip():
    cfg = RunConfig().override("train", epochs=5)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


def test_override_ignores_unset_flags():
    cfg = RunConfig().override("features", beta=None, q=8.0)
    assert cfg.features.q == 8.0 and cfg.features.beta == RunConfig().features.beta


@pytest.mark.parametrize("data", [
    {"bogus": {}},
    {"flow": {"sigma": 1}},
    {"flow": {"alpha": -1}},
    {"bp": []},
    {"seed": "one"},
    {"paths": {"a": 1}},
    [],
])
def test_rejects_invalid(data):
    with pytest.raises(DataError):
        RunConfig.from_dict(data)


def test_invalid_json(tmp_path):
    (tmp_path / "c.json").write_text("{")
    with pytest.raises(DataError):
        load_config(tmp_path / "c.json")
