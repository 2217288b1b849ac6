"""Joint-space retargeting of the glove pose onto dexterous hand models.

A hand model is a list of joints, each fed from one glove channel through
``clamp(scale * source + offset, lower, upper)``. Models live in YAML files
(limits and offsets in degrees); three presets ship with the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .model import JOINT_INDEX, ConfigError, JointState


@dataclass(frozen=True)
class HandJoint:
    name: str
    lower: float  # rad
    upper: float  # rad
    source: str | None  # glove channel name; None holds the joint at its offset
    scale: float = 1.0
    offset: float = 0.0  # rad


@dataclass(frozen=True)
class HandModel:
    name: str
    joints: tuple[HandJoint, ...]
    description: str = ""

    def __post_init__(self):
        self.validate()

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def joint_names(self) -> tuple[str, ...]:
        return tuple(j.name for j in self.joints)

    def validate(self) -> None:
        seen = set()
        for j in self.joints:
            if j.name in seen:
                raise ConfigError(f"joints.{j.name}", "duplicate joint name")
            seen.add(j.name)
            if not j.lower < j.upper:
                raise ConfigError(f"joints.{j.name}", "lower limit must be < upper limit")
            if j.source is not None and j.source not in JOINT_INDEX:
                raise ConfigError(
                    f"joints.{j.name}.source", f"unknown glove channel {j.source!r}"
                )
            if not (math.isfinite(j.scale) and math.isfinite(j.offset)):
                raise ConfigError(f"joints.{j.name}", "scale and offset must be finite")


@dataclass(frozen=True)
class HandCommand:
    model: str
    targets: tuple[float, ...]
    clamp_mask: tuple[bool, ...] = field(default=())


def retarget(state: JointState, model: HandModel) -> HandCommand:
    targets, mask = [], []
    for j in model.joints:
        raw = j.offset if j.source is None else j.scale * state[j.source] + j.offset
        clamped = min(max(raw, j.lower), j.upper)
        targets.append(clamped)
        mask.append(clamped != raw)
    return HandCommand(model.name, tuple(targets), tuple(mask))


def unclamped_targets(state: JointState, model: HandModel) -> tuple[float, ...]:
    return tuple(
        j.offset if j.source is None else j.scale * state[j.source] + j.offset
        for j in model.joints
    )


def model_from_dict(data: Mapping[str, Any]) -> HandModel:
    if not isinstance(data, Mapping) or "joints" not in data:
        raise ConfigError("<hand model>", "expected a mapping with 'name' and 'joints'")
    name = data.get("name", "unnamed")
    allowed = {"name", "lower_deg", "upper_deg", "source", "scale", "offset_deg"}
    joints = []
    for i, jd in enumerate(data["joints"]):
        if not isinstance(jd, Mapping):
            raise ConfigError(f"joints[{i}]", "each joint must be a mapping")
        unknown = set(jd) - allowed
        if unknown:
            raise ConfigError(f"joints[{i}].{sorted(unknown)[0]}", "unknown key")
        try:
            joints.append(
                HandJoint(
                    name=str(jd["name"]),
                    lower=math.radians(float(jd["lower_deg"])),
                    upper=math.radians(float(jd["upper_deg"])),
                    source=jd.get("source"),
                    scale=float(jd.get("scale", 1.0)),
                    offset=math.radians(float(jd.get("offset_deg", 0.0))),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"joints[{i}].{exc.args[0]}", "missing key") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"joints[{i}]", str(exc)) from None
    return HandModel(str(name), tuple(joints), str(data.get("description", "")))


def load_hand_model(path: str | Path) -> HandModel:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"parse error: {exc}") from None
    return model_from_dict(data)


PRESET_FILES = {
    "ry-h2": "ry_h2_6dof.yaml",
    "ry-h1": "ry_h1_15dof.yaml",
    "shadow": "shadow_24dof.yaml",
}


def load_preset(name: str) -> HandModel:
    try:
        filename = PRESET_FILES[name]
    except KeyError:
        raise ConfigError("model", f"unknown preset {name!r}; have {sorted(PRESET_FILES)}") from None
    text = resources.files("cableglove.presets").joinpath(filename).read_text(encoding="utf-8")
    return model_from_dict(yaml.safe_load(text))


def builtin_models() -> dict[str, HandModel]:
    """The 6-, 15- and 24-DoF presets keyed by preset name."""
    return {name: load_preset(name) for name in PRESET_FILES}


def resolve_model(spec: str) -> HandModel:
    """A preset name or a path to a hand-model file."""
    if spec in PRESET_FILES:
        return load_preset(spec)
    return load_hand_model(spec)
