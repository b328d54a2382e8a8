import argparse
import configparser

import pytest

from matchinglab import Diagnostics
from matchinglab.Instances import ScaleProfile
from matchinglab.LabConfig import DEFAULTS, RunConfig, save_config_set
from matchinglab.LabErrors import ProfileInvalid
from matchinglab.MatchingEngine import DEFAULT_MATCHING_CAP


def namespace(settings, **flags):
    base = dict(command="diam", settings=settings, config=None, profile=None, cap=None, budget=None,
                workers=None, format=None, seed=None, out=None, copy=None)
    base.update(flags)
    return argparse.Namespace(**base)


@pytest.fixture
def ini(tmp_path):
    return str(tmp_path / "MatchingLab.ini")


def test_defaults_without_file(ini):
    config = RunConfig.resolve(namespace(ini))
    assert config.cap == DEFAULT_MATCHING_CAP
    assert config.profile == ScaleProfile.parse(DEFAULTS["Profile"])
    assert config.fmt == "table"
    assert config.workers == 1
    assert not config.copy
    assert config.out_dir == ""


def test_selected_set_and_flag_precedence(ini):
    save_config_set("Desk", {"MatchingCap": 50, "Workers": 3, "Format": "json", "Profile": "4,2,1"}, path=ini)
    config = RunConfig.resolve(namespace(ini))
    assert config.config_set == "Desk"
    assert (config.cap, config.workers, config.fmt) == (50, 3, "json")
    assert config.profile == ScaleProfile(h_c=4, t_c=1, t=2)

    flagged = RunConfig.resolve(namespace(ini, cap=7, format="dot", profile="2,1,1"))
    assert (flagged.cap, flagged.workers, flagged.fmt) == (7, 3, "dot")
    assert flagged.profile.h_c == 2


def test_save_selects_set(ini):
    save_config_set("A", {"Seed": 4}, path=ini)
    save_config_set("B", {"Seed": 9}, select=False, path=ini)
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    cfg.read(ini)
    assert cfg["-Main-"]["SelectedConfig"] == "A"
    assert "NewSet" not in cfg
    assert RunConfig.resolve(namespace(ini)).seed == 4
    assert RunConfig.resolve(namespace(ini, config="B")).seed == 9
    with pytest.raises(KeyError):
        save_config_set("A", {"Colour": "red"}, path=ini)


def test_bad_values_are_refused(ini):
    with pytest.raises(ProfileInvalid):
        RunConfig.resolve(namespace(ini, cap=0))
    save_config_set("Bad", {"Format": "svg"}, path=ini)
    with pytest.raises(ProfileInvalid):
        RunConfig.resolve(namespace(ini))
    save_config_set("Odd", {"Profile": "2,1"}, path=ini)
    with pytest.raises(ProfileInvalid):
        RunConfig.resolve(namespace(ini))


def test_unparsable_integer_falls_back(ini):
    save_config_set("Loose", {"Workers": "many", "CopyReport": "yes"}, path=ini)
    config = RunConfig.resolve(namespace(ini))
    assert config.workers == 1
    assert config.copy


@pytest.mark.parametrize("raw, expected", [("on", True), ("1", True), ("off", False), ("maybe", False), (" ", False)])
def test_copy_report_values(ini, raw, expected):
    save_config_set("Clip", {"CopyReport": raw}, path=ini)
    assert RunConfig.resolve(namespace(ini)).copy is expected


def test_config_json(ini):
    doc = RunConfig.resolve(namespace(ini)).to_json()
    assert doc["profile"]["h_c"] == 2
    assert doc["command"] == "diam"


def test_diagnostics_history():
    diag = Diagnostics.Diagnostics()
    assert diag.worst is None
    diag.info("start")
    diag.warning("clipboard unavailable", "no backend")
    diag.receive_message(99, "odd level")
    assert diag.worst == Diagnostics.WARNING
    assert [e["level"] for e in diag.to_json()] == ["INFO", "WARN", "INFO"]
    assert diag.lines()[1].endswith("[WARN] clipboard unavailable (no backend)")
    diag.clear()
    assert diag.entries == []
