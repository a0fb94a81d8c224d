"""Scenario file format.

A scenario file is INI text with a single ``[scenario]`` section of flat
``key = value`` lines. Keys are the ``ScenarioSpec`` field names, plus the
flattened weight and threshold keys below. Ranges and vectors are
comma-separated numbers. Unknown keys are rejected; missing keys take their
defaults.

    [scenario]
    seed = 42
    classifier_total = 60
    gain_range = 0.02, 0.15
    c1 = 0.4
    c2 = 0.6
    s_weight = 0.25, 0.25, 0.25, 0.25
    constraint_thresholds = 0.9, 0.9, 0.9, 0.9
    green_min = 0.75
"""

from __future__ import annotations

import configparser
import io
from dataclasses import fields
from typing import Dict, IO, Tuple, Union

from .cluster import ResourceVector, ScenarioError
from .priority import ConfigError, PriorityThresholds, WeightConfig
from .workload import ScenarioSpec

SECTION = "scenario"

_NESTED = ("weights", "constraint_thresholds", "priority_thresholds")
_WEIGHT_KEYS = ("c1", "c2", "s_weight", "a_weight", "relax_c1_c2")
_PRIORITY_KEYS = ("green_min", "yellow_min", "blue_min")


def _fmt_num(v: float) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def _fmt_vec(vals) -> str:
    return ", ".join(_fmt_num(float(v)) for v in vals)


def spec_to_dict(spec: ScenarioSpec) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for f in fields(spec):
        if f.name in _NESTED:
            continue
        v = getattr(spec, f.name)
        if isinstance(v, bool):
            out[f.name] = "true" if v else "false"
        elif isinstance(v, tuple):
            out[f.name] = _fmt_vec(v)
        else:
            out[f.name] = _fmt_num(v)
    w = spec.weights
    out["c1"] = _fmt_num(w.c1)
    out["c2"] = _fmt_num(w.c2)
    out["s_weight"] = _fmt_vec(w.s_weight)
    out["a_weight"] = _fmt_vec(w.a_weight)
    out["relax_c1_c2"] = "true" if w.relax_order else "false"
    out["constraint_thresholds"] = _fmt_vec(spec.constraint_thresholds.as_tuple())
    pt = spec.priority_thresholds
    for k in _PRIORITY_KEYS:
        out[k] = _fmt_num(getattr(pt, k))
    return out


def dumps(spec: ScenarioSpec) -> str:
    cp = configparser.ConfigParser()
    cp[SECTION] = spec_to_dict(spec)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _parse_vec(key: str, text: str, n: int) -> Tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"{key}: expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise ConfigError(f"{key}: expected {n} values, got {len(vals)}")
    return vals


def _parse_bool(key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def spec_from_dict(raw: Dict[str, str]) -> ScenarioSpec:
    defaults = ScenarioSpec()
    kwargs = {}
    types = {f.name: getattr(defaults, f.name) for f in fields(defaults)}
    known = set(types) - set(_NESTED) | set(_WEIGHT_KEYS) | set(_PRIORITY_KEYS) | {"constraint_thresholds"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    try:
        for key, text in raw.items():
            if key not in types or key in _NESTED:
                continue
            default = types[key]
            if isinstance(default, bool):
                kwargs[key] = _parse_bool(key, text)
            elif isinstance(default, tuple):
                kwargs[key] = _parse_vec(key, text, len(default))
            elif isinstance(default, int):
                kwargs[key] = int(text)
            else:
                kwargs[key] = float(text)

        w = defaults.weights
        kwargs["weights"] = WeightConfig(
            c1=float(raw.get("c1", w.c1)),
            c2=float(raw.get("c2", w.c2)),
            s_weight=_parse_vec("s_weight", raw["s_weight"], 4) if "s_weight" in raw else w.s_weight,
            a_weight=_parse_vec("a_weight", raw["a_weight"], 4) if "a_weight" in raw else w.a_weight,
            relax_order=_parse_bool("relax_c1_c2", raw["relax_c1_c2"]) if "relax_c1_c2" in raw else False,
        )
        if "constraint_thresholds" in raw:
            thr = _parse_vec("constraint_thresholds", raw["constraint_thresholds"], 4)
            if not all(0.0 < t <= 1.0 for t in thr):
                raise ConfigError("constraint_thresholds must lie in (0, 1]")
            kwargs["constraint_thresholds"] = ResourceVector(*thr)
        pt = defaults.priority_thresholds
        kwargs["priority_thresholds"] = PriorityThresholds(
            **{k: float(raw.get(k, getattr(pt, k))) for k in _PRIORITY_KEYS}
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ConfigError(str(exc)) from None
    return ScenarioSpec(**kwargs)


def loads(text: str) -> ScenarioSpec:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file: {exc}") from None
    if not cp.has_section(SECTION):
        raise ConfigError(f"scenario file needs a [{SECTION}] section")
    return spec_from_dict(dict(cp[SECTION]))


def load(path_or_file: Union[str, IO[str]]) -> ScenarioSpec:
    if isinstance(path_or_file, str):
        with open(path_or_file, encoding="utf-8") as fh:
            return loads(fh.read())
    return loads(path_or_file.read())


def dump(spec: ScenarioSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(spec))
