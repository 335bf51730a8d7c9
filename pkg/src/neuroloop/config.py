"""YAML experiment configs with ``include`` support and dataclass conversion.

A config file is a nested mapping. The optional top-level key ``include``
names one file or a list of files, resolved relative to the including
file; their contents are merged first, in order, and the including file
is merged on top. Mappings merge key by key; any other value replaces.

Shipped configs live in ``neuroloop/data/configs`` and can be referred to
by bare name, e.g. ``load_config("navigate")``.
"""

from __future__ import annotations

import copy
import dataclasses
import os
import typing
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .chip.config import ChipConfig, _dpi_from_mapping, chip_config_from_dict, chip_config_to_dict
from .dynamics import DpiParams
from .errors import ConfigError

_MAX_DEPTH = 16


def builtin_config_dir() -> Path:
    return Path(str(resources.files("neuroloop.data").joinpath("configs")))


def builtin_names() -> list[str]:
    return sorted(p.stem for p in builtin_config_dir().glob("*.yaml"))


def resolve_config_path(name: str | os.PathLike) -> Path:
    """A path as given if it exists, otherwise a shipped config of that name."""
    p = Path(name)
    if p.is_file():
        return p
    stem = p.name[:-5] if p.name.endswith(".yaml") else p.name
    candidate = builtin_config_dir() / f"{stem}.yaml"
    if p.parent == Path(".") and candidate.exists():
        return candidate
    raise ConfigError("include" if p.parent != Path(".") else "config", f"no such config file: {name}")


def deep_merge(base: Mapping[str, Any], over: Mapping[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(dict(base))
    for key, value in over.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _read(path: Path, depth: int, stack: tuple[Path, ...]) -> dict[str, Any]:
    if depth > _MAX_DEPTH or path.resolve() in stack:
        raise ConfigError("include", f"include cycle through {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"YAML parse error: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(str(path), "top level must be a mapping")
    data = dict(data)
    inc = data.pop("include", None)
    if inc is None:
        return data
    if isinstance(inc, (str, os.PathLike)):
        inc = [inc]
    if not isinstance(inc, list):
        raise ConfigError("include", "must be a file name or a list of file names")
    merged: dict[str, Any] = {}
    for item in inc:
        target = path.parent / str(item)
        if not target.is_file():
            target = resolve_config_path(str(item))
        merged = deep_merge(merged, _read(target, depth + 1, stack + (path.resolve(),)))
    return deep_merge(merged, data)


def load_config(name: str | os.PathLike) -> dict[str, Any]:
    """Read a config file (or shipped config name) with includes resolved."""
    return _read(resolve_config_path(name), 0, ())


def dump_config(data: Mapping[str, Any]) -> str:
    return yaml.safe_dump(_plain(data), sort_keys=False, default_flow_style=False)


def _plain(value):
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "item") and callable(value.item):
        return value.item()
    return value


# -- dataclass conversion ---------------------------------------------------------


def _unwrap_optional(hint):
    args = typing.get_args(hint)
    if args and type(None) in args:
        rest = [a for a in args if a is not type(None)]
        if len(rest) == 1:
            return rest[0]
    return hint


def _to_tuple(value):
    if isinstance(value, list):
        return tuple(_to_tuple(v) for v in value)
    return value


def from_dict(cls, data: Mapping[str, Any] | None, path: str = ""):
    """Build dataclass ``cls`` from a nested mapping, recursing into dataclass fields.

    Unknown keys and invalid values raise :class:`ConfigError` naming the
    offending field path; omitted keys keep their defaults.
    """
    path = path or cls.__name__
    if cls is ChipConfig:
        return chip_config_from_dict(data, path)
    if cls is DpiParams:
        return _dpi_from_mapping(data or {}, path)
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(path, f"expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"{path}.{key}", "unknown field")
        hint = _unwrap_optional(hints.get(key))
        if dataclasses.is_dataclass(hint) and isinstance(hint, type):
            if value is None and hint is not ChipConfig:
                kwargs[key] = None
                continue
            value = from_dict(hint, value, f"{path}.{key}")
        else:
            value = _to_tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def to_dict(obj) -> dict[str, Any]:
    """Inverse of :func:`from_dict` producing YAML-friendly plain values."""
    if isinstance(obj, ChipConfig):
        return _plain(chip_config_to_dict(obj))
    out = {}
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if dataclasses.is_dataclass(value):
            out[f.name] = to_dict(value)
        else:
            out[f.name] = _plain(value)
    return out


def section(cfg: Mapping[str, Any], key: str, path: str | None = None) -> dict[str, Any]:
    value = cfg.get(key, {})
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise ConfigError(path or key, f"expected a mapping, got {type(value).__name__}")
    return dict(value)
