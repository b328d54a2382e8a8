#!/usr/bin/env python3
"""
Named configuration sets kept in ~/MatchingLab.ini and the resolved RunConfig.

The INI file has one section per configuration set plus a ``-Main-`` section
whose ``SelectedConfig`` names the active set::

    [-Main-]
    SelectedConfig = Desk

    [Desk]
    MatchingCap = 1000000
    StateBudget = 10000000
    Workers = 4
    Profile = 4,2,1
    Format = table
    Seed = 0
    CopyReport = no
    OutputDirectory = ~/matchinglab-runs

Command-line flags win over the selected set, the set wins over the defaults.
"""

import argparse
import configparser
import logging
import os
from dataclasses import asdict, dataclass
from typing import Optional

from .Instances import ScaleProfile
from .LabErrors import ProfileInvalid
from .MatchingEngine import DEFAULT_MATCHING_CAP, DEFAULT_STATE_BUDGET

log = logging.getLogger(__name__)

FORMATS = ("json", "table", "dot")

DEFAULTS = {
    "MatchingCap": str(DEFAULT_MATCHING_CAP),
    "StateBudget": str(DEFAULT_STATE_BUDGET),
    "Workers": "1",
    "Profile": "2,1,1",
    "Format": "table",
    "Seed": "0",
    "CopyReport": "no",
    "OutputDirectory": "",
}


def _settings_path(override: Optional[str] = None) -> str:
    return os.path.abspath(os.path.expanduser(override or "~/MatchingLab.ini"))


def _read_sets(path: Optional[str] = None) -> configparser.ConfigParser:
    """Settings file with ``-Main-`` present and SelectedConfig naming an existing set."""
    cfg = configparser.ConfigParser()
    cfg.optionxform = str  # keys keep their case
    cfg.read(_settings_path(path))
    cfg.setdefault("-Main-", {})
    sets = [s for s in cfg.sections() if s != "-Main-"] or ["NewSet"]
    selected = cfg["-Main-"].get("SelectedConfig", sets[0])
    cfg.setdefault(selected, {})
    cfg["-Main-"]["SelectedConfig"] = selected
    return cfg


def _write_sets(cfg: configparser.ConfigParser, path: Optional[str] = None) -> None:
    with open(_settings_path(path), "w", encoding="utf-8") as fp:
        cfg.write(fp)


def _setting(section: configparser.SectionProxy, key: str, default, convert):
    """``convert`` applied to the stored value; blanks and bad values give ``default``."""
    raw = section.get(key, "").strip()
    if not raw:
        return default
    try:
        return convert(raw)
    except ValueError:
        log.warning("setting %s=%r is unreadable; using %r", key, raw, default)
        return default


def _yes_no(raw: str) -> bool:
    states = configparser.ConfigParser.BOOLEAN_STATES
    if raw.lower() not in states:
        raise ValueError(raw)
    return states[raw.lower()]


@dataclass(frozen=True)
class RunConfig:
    command: str
    config_set: str
    cap: int
    budget: int
    workers: int
    profile: ScaleProfile
    fmt: str
    seed: int
    copy: bool
    out_dir: str

    def __post_init__(self) -> None:
        for name in ("cap", "budget", "workers"):
            if getattr(self, name) < 1:
                raise ProfileInvalid(f"{name} must be positive, got {getattr(self, name)}")
        if self.fmt not in FORMATS:
            raise ProfileInvalid(f"unknown output format {self.fmt!r}")

    @classmethod
    def resolve(cls, args: argparse.Namespace) -> "RunConfig":
        """Merge command-line flags over the selected (or --config) set."""
        cfg = _read_sets(getattr(args, "settings", None))
        name = getattr(args, "config", None) or cfg["-Main-"]["SelectedConfig"]
        if name not in cfg:
            log.warning("configuration set %r not found; using defaults", name)
            cfg[name] = {}
        sec = cfg[name]

        def pick(flag: str, value):
            got = getattr(args, flag, None)
            return value if got is None else got

        profile_text = pick("profile", sec.get("Profile", DEFAULTS["Profile"]))
        profile = profile_text if isinstance(profile_text, ScaleProfile) else ScaleProfile.parse(profile_text)
        out_dir = pick("out", sec.get("OutputDirectory", DEFAULTS["OutputDirectory"])) or ""
        return cls(
            command=getattr(args, "command", "") or "",
            config_set=name,
            cap=pick("cap", _setting(sec, "MatchingCap", DEFAULT_MATCHING_CAP, int)),
            budget=pick("budget", _setting(sec, "StateBudget", DEFAULT_STATE_BUDGET, int)),
            workers=pick("workers", _setting(sec, "Workers", 1, int)),
            profile=profile,
            fmt=pick("format", sec.get("Format", DEFAULTS["Format"]).strip()),
            seed=pick("seed", _setting(sec, "Seed", 0, int)),
            copy=bool(getattr(args, "copy", False)) or _setting(sec, "CopyReport", False, _yes_no),
            out_dir=os.path.expanduser(out_dir) if out_dir else "",
        )

    def to_json(self) -> dict:
        data = asdict(self)
        data["profile"] = self.profile.to_json()
        return data


def save_config_set(name: str, values: dict, select: bool = True, path: Optional[str] = None) -> None:
    """Write (or overwrite) one configuration set, optionally selecting it."""
    cfg = _read_sets(path)
    if name not in cfg:
        cfg[name] = {}
    for key, value in values.items():
        if key not in DEFAULTS:
            raise KeyError(f"unknown setting {key!r}")
        cfg[name][key] = str(value)
    if select:
        cfg["-Main-"]["SelectedConfig"] = name
    if "NewSet" in cfg and name != "NewSet" and not cfg["NewSet"]:
        cfg.remove_section("NewSet")
    _write_sets(cfg, path)
