from pathlib import Path

import pytest

from hetnet_ia.errors import ConfigError
from hetnet_ia.scenario import example_scenario, load_scenario, scenario_from_mapping, snr_range

SCEN = Path(__file__).resolve().parents[1] / "scenarios"


def test_snr_range_inclusive():
    assert snr_range(0, 40, 5) == tuple(float(x) for x in range(0, 41, 5))
    assert snr_range(0, 1, 0.1)[-1] == 1.0


@pytest.mark.parametrize("args", [(0, 10, 0), (0, 10, -1), (10, 0, 1)])
def test_snr_range_rejects(args):
    with pytest.raises(ConfigError):
        snr_range(*args)


def test_example_defaults():
    sc = example_scenario()
    assert sc.frames == 500 and sc.bits_per_frame == 6144
    assert sc.power.p_macrocell == 40 and sc.power.p_femtocell == 5
    assert sc.snr_points[0] == 0 and sc.snr_points[-1] == 40


def test_shipped_files_load():
    ex = load_scenario(SCEN / "example.yaml")
    ref = example_scenario()
    assert ex.topology.K == ref.topology.K and ex.snr_points == ref.snr_points
    assert (ex.topology.d_macro == ref.topology.d_macro).all()
    l2 = load_scenario(SCEN / "blind_l2.yaml")
    assert l2.topology.L == 2 and l2.frames == 100 and l2.name == "blind_l2"


def test_round_trip_through_mapping():
    sc = load_scenario(SCEN / "blind_l2.yaml")
    again = scenario_from_mapping({"scenario": sc.to_mapping()})
    assert again.to_mapping() == sc.to_mapping()


def test_overrides_ignore_none():
    sc = example_scenario().with_overrides(frames=3, seed=None)
    assert sc.frames == 3 and sc.seed == 0


@pytest.mark.parametrize(
    "m",
    [
        [],
        {"power": {}},
        {"topology": {"K": 2}},
        {"topology": example_scenario().to_mapping()["topology"], "extra": 1},
        {"topology": example_scenario().to_mapping()["topology"], "simulation": {"frames": "x"}},
        {"topology": example_scenario().to_mapping()["topology"], "simulation": {"frames": 0}},
        {"topology": example_scenario().to_mapping()["topology"], "simulation": {"bogus": 1}},
        {"topology": example_scenario().to_mapping()["topology"], "simulation": {"snr_db": {"start": 0}}},
    ],
)
def test_bad_mappings(m):
    with pytest.raises(ConfigError):
        scenario_from_mapping(m)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("topology: [unclosed\n")
    with pytest.raises(ConfigError):
        load_scenario(bad)
