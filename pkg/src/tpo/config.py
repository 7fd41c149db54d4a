"""Configuration bundles: robot + profile + calibration + scenario + condition.

A bundle can be loaded from a config file whose members are paths, or
rebuilt from the inline snapshot stored at the head of every trial log,
which is what makes logs self-contained and replayable anywhere.

Relative paths are tried against the filesystem first and then against
the data files shipped inside the package, so `scripts/paper_mission_demo`
works from any working directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from tpo import kernels
from tpo.defs import Condition, HTTP_PORT_DEFAULT, PROTOCOL_VERSION, TCP_PORT_DEFAULT
from tpo.control import ControlProfile, load_profile
from tpo.haptics import CalibrationProfile, load_calibration
from tpo.robot import RobotModel, load_robot_description
from tpo.scenario import Scenario, load_scenario

DEFAULT_CONFIG = "configs/default.json"


class ConfigError(ValueError):
    """Raised when a config file or snapshot cannot be loaded."""


def resolve_data_path(path: str | Path) -> Path:
    """Find a data file on disk or among the package's shipped data.

    Tries the path as given, then with a .json suffix, then the same two
    under the packaged data directory.
    """
    p = Path(path)
    candidates = [p]
    if p.suffix != ".json":
        candidates.append(p.with_name(p.name + ".json"))
    for cand in candidates:
        if cand.is_file():
            return cand
    if not p.is_absolute():
        data_root = resources.files("tpo").joinpath("data")
        for cand in candidates:
            packaged = Path(str(data_root.joinpath(str(cand))))
            if packaged.is_file():
                return packaged
    raise ConfigError(f"data file not found: {path}")


def read_data_text(path: str | Path) -> str:
    return resolve_data_path(path).read_text()


@dataclass(frozen=True)
class ConfigBundle:
    robot: RobotModel
    profile: ControlProfile
    calibration: CalibrationProfile
    scenario: Scenario
    condition: Condition
    telemetry_hz: float
    input_hz: float
    tcp_port: int
    http_port: int
    # raw documents, kept verbatim so log snapshots are self-contained
    robot_doc: dict
    profile_doc: dict
    calibration_doc: dict
    scenario_doc: dict

    def snapshot(self) -> dict:
        """Everything needed to rebuild this bundle, plus provenance fields."""
        return {
            "type": "config_snapshot",
            "protocol_version": PROTOCOL_VERSION,
            "kernel_backend": kernels.BACKEND,
            "condition": self.condition.value,
            "telemetry_hz": self.telemetry_hz,
            "input_hz": self.input_hz,
            "robot": self.robot_doc,
            "profile": self.profile_doc,
            "calibration": self.calibration_doc,
            "scenario": self.scenario_doc,
        }


def _bundle_from_docs(
    robot_doc: dict,
    profile_doc: dict,
    calibration_doc: dict,
    scenario_doc: dict,
    condition: Condition,
    telemetry_hz: float = 60.0,
    input_hz: float = 50.0,
    tcp_port: int = TCP_PORT_DEFAULT,
    http_port: int = HTTP_PORT_DEFAULT,
) -> ConfigBundle:
    if telemetry_hz <= 0 or input_hz <= 0:
        raise ConfigError("telemetry_hz and input_hz must be positive")
    return ConfigBundle(
        robot=load_robot_description(json.dumps(robot_doc)),
        profile=load_profile(json.dumps(profile_doc)),
        calibration=load_calibration(json.dumps(calibration_doc)),
        scenario=load_scenario(json.dumps(scenario_doc)),
        condition=condition,
        telemetry_hz=float(telemetry_hz),
        input_hz=float(input_hz),
        tcp_port=int(tcp_port),
        http_port=int(http_port),
        robot_doc=robot_doc,
        profile_doc=profile_doc,
        calibration_doc=calibration_doc,
        scenario_doc=scenario_doc,
    )


def _load_doc(path: str | Path) -> dict:
    try:
        return json.loads(read_data_text(path))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc


def load_bundle(
    config_path: str | Path = DEFAULT_CONFIG,
    condition: str | Condition | None = None,
    profile_path: str | Path | None = None,
) -> ConfigBundle:
    """Load a bundle from a config file, with optional overrides."""
    doc = _load_doc(config_path)
    try:
        cond = Condition(condition.value if isinstance(condition, Condition)
                         else condition) if condition is not None \
            else Condition(doc.get("condition", "C"))
    except ValueError as exc:
        raise ConfigError(f"unknown condition: {exc}") from exc
    try:
        return _bundle_from_docs(
            robot_doc=_load_doc(doc["robot"]),
            profile_doc=_load_doc(profile_path if profile_path is not None
                                  else doc["profile"]),
            calibration_doc=_load_doc(doc["calibration"]),
            scenario_doc=_load_doc(doc["scenario"]),
            condition=cond,
            telemetry_hz=doc.get("telemetry_hz", 60.0),
            input_hz=doc.get("input_hz", 50.0),
            tcp_port=doc.get("tcp_port", TCP_PORT_DEFAULT),
            http_port=doc.get("http_port", HTTP_PORT_DEFAULT),
        )
    except KeyError as exc:
        raise ConfigError(f"config is missing required key {exc}") from exc


def bundle_from_snapshot(snap: dict, profile_doc: dict | None = None) -> ConfigBundle:
    """Rebuild the bundle a log was recorded with (optionally overriding
    the control profile, as replay-with-other-profile does)."""
    if snap.get("type") != "config_snapshot":
        raise ConfigError("not a config snapshot")
    try:
        return _bundle_from_docs(
            robot_doc=snap["robot"],
            profile_doc=profile_doc if profile_doc is not None else snap["profile"],
            calibration_doc=snap["calibration"],
            scenario_doc=snap["scenario"],
            condition=Condition(snap["condition"]),
            telemetry_hz=snap.get("telemetry_hz", 60.0),
            input_hz=snap.get("input_hz", 50.0),
        )
    except KeyError as exc:
        raise ConfigError(f"snapshot is missing required key {exc}") from exc
