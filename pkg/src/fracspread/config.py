"""Run configuration: strict YAML schema with line-numbered diagnostics."""
import copy
import re
from dataclasses import dataclass
from importlib import resources

import yaml

from fracspread.errors import ConfigError, ValidationError
from fracspread.model import ModelSpec

_REQUIRED = object()


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats without a dot (1e-3)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)

# section -> key -> (type(s), default)
SCHEMA = {
    "model": {
        "m": (int, _REQUIRED),
        "alpha": (list, _REQUIRED),
        "K": (list, _REQUIRED),
        "r": (list, _REQUIRED),
        "q": (list, _REQUIRED),
        "delta": (float, _REQUIRED),
        "lambda_big": (float, _REQUIRED),
        "dim": (int, 1),
    },
    "grid": {
        "n": (int, _REQUIRED),
        "L": (float, _REQUIRED),
    },
    "time": {
        "dt": (float, 0.01),
        "t_end": (float, _REQUIRED),
        "cadence": (float, 0.25),
        "snapshot_times": (list, None),
    },
    "ic": {
        "kind": (str, "compact_bump"),
        "h": (list, _REQUIRED),
        "r": (float, 1.0),
        "center": (float, 0.0),
    },
    "fronts": {
        "mu": (list, [1e-2, 1e-3]),
        "window": (list, None),
        "slope_rtol": (float, 0.10),
        "spread_tol": (float, 0.05),
    },
    "verify": {
        "guard_tol": (float, None),
        "residual_rtol": (float, 1e-6),
        "residual_times": (list, [0.0, 1.0, 2.0, 4.0]),
        "residual_n": (int, 2**15),
        "residual_L": (float, 2.0**12),
        "domination_tol": (float, 1e-8),
        "super_t0": (float, 1.0),
        "sub_t1": (float, None),
        "n_samples": (int, 1000),
    },
    "output": {
        "directory": (str, "out"),
        "prefix": (str, ""),
        "write_snapshots": (bool, True),
        "snapshot_stride": (int, 1),
    },
}
REQUIRED_SECTIONS = ("model", "grid", "time", "ic")


def _line_index(node, path=(), out=None):
    """Map key paths to 1-based line numbers."""
    if out is None:
        out = {}
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            out[path + (key,)] = k.start_mark.line + 1
            _line_index(v, path + (key,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_index(v, path + (i,), out)
    return out


@dataclass
class RunConfig:
    sections: dict

    def __getitem__(self, name):
        return self.sections[name]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.sections == other.sections

    def model(self):
        d = dict(self.sections["model"])
        m = d.pop("m")
        spec = ModelSpec(**d)
        if spec.m != m:
            raise ValidationError(f"model.m = {m} but alpha has {spec.m} entries")
        return spec

    def grid(self):
        from fracspread.spectral import Grid

        return Grid(self.sections["grid"]["n"], self.sections["grid"]["L"])

    def snapshot_times(self):
        tm = self.sections["time"]
        if tm["snapshot_times"] is not None:
            return [float(t) for t in tm["snapshot_times"]]
        k = int(round(tm["t_end"] / tm["cadence"]))
        times = [j * tm["cadence"] for j in range(k + 1) if j * tm["cadence"] <= tm["t_end"] + 1e-12]
        if abs(times[-1] - tm["t_end"]) > 1e-12:
            times.append(tm["t_end"])
        return times

    def with_overrides(self, t_end=None, mu=None):
        sec = copy.deepcopy(self.sections)
        if t_end is not None:
            sec["time"]["t_end"] = float(t_end)
        if mu is not None:
            sec["fronts"]["mu"] = [float(v) for v in mu]
        out = RunConfig(sec)
        _validate_ranges(out.sections, {})
        return out


def _coerce(value, typ, where, line):
    if value is None:
        return None
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}", line)
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}", line)
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}", line)
        return value
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}", line)
        return value
    if typ is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}", line)
        return _number_list(value, where, line)
    raise AssertionError(typ)


def _number_list(value, where, line):
    out = []
    for v in value:
        if isinstance(v, list):
            out.append(_number_list(v, where, line))
        elif isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where}: list entries must be numbers, got {v!r}", line)
        else:
            out.append(float(v))
    return out


def _validate_ranges(sec, lines):
    def fail(path, msg):
        raise ConfigError(f"{'.'.join(path)}: {msg}", lines.get(path))

    mdl = sec["model"]
    for i, a in enumerate(mdl["alpha"]):
        if not (0 < a <= 1):
            fail(("model", "alpha"), f"entry {i} = {a} is outside (0, 1]")
    if len(mdl["alpha"]) != mdl["m"]:
        fail(("model", "alpha"), f"expected {mdl['m']} entries, got {len(mdl['alpha'])}")
    if mdl["m"] < 1:
        fail(("model", "m"), "must be at least 1")
    g = sec["grid"]
    if g["n"] < 8 or g["n"] & (g["n"] - 1):
        fail(("grid", "n"), "must be a power of two >= 8")
    if not g["L"] > 0:
        fail(("grid", "L"), "must be positive")
    tm = sec["time"]
    if not tm["dt"] > 0:
        fail(("time", "dt"), "must be positive")
    if tm["t_end"] < 0:
        fail(("time", "t_end"), "must be nonnegative")
    if not tm["cadence"] > 0:
        fail(("time", "cadence"), "must be positive")
    if tm["snapshot_times"] is not None and any(t < 0 or t > tm["t_end"] for t in tm["snapshot_times"]):
        fail(("time", "snapshot_times"), "entries must lie in [0, t_end]")
    ic = sec["ic"]
    if ic["kind"] not in ("compact_bump", "algebraic_tail"):
        fail(("ic", "kind"), "must be compact_bump or algebraic_tail")
    if len(ic["h"]) != mdl["m"]:
        fail(("ic", "h"), f"expected {mdl['m']} entries")
    if not ic["r"] > 0:
        fail(("ic", "r"), "must be positive")
    fr = sec["fronts"]
    if not fr["mu"] or any(v <= 0 for v in fr["mu"]):
        fail(("fronts", "mu"), "levels must be positive")
    if fr["window"] is not None and (len(fr["window"]) != 2 or fr["window"][0] >= fr["window"][1]):
        fail(("fronts", "window"), "must be [t_start, t_stop] with t_start < t_stop")
    out = sec["output"]
    if out["snapshot_stride"] < 1:
        fail(("output", "snapshot_stride"), "must be >= 1")
    ver = sec["verify"]
    if ver["residual_n"] < 8 or ver["residual_n"] & (ver["residual_n"] - 1):
        fail(("verify", "residual_n"), "must be a power of two >= 8")


def parse_config(text):
    """Parse and validate configuration text; raises ConfigError with line info."""
    try:
        node = yaml.compose(text, Loader=_Loader)
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed configuration: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    if node is None or not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections", 1)
    lines = _line_index(node)
    sections = {}
    for name in data:
        if name not in SCHEMA:
            raise ConfigError(f"unknown section {name!r}", lines.get((name,)))
    for name in REQUIRED_SECTIONS:
        if name not in data:
            raise ConfigError(f"missing section {name!r}", None)
    for name, keys in SCHEMA.items():
        raw = data.get(name) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"section {name!r} must be a mapping", lines.get((name,)))
        for k in raw:
            if k not in keys:
                raise ConfigError(f"unknown key {name}.{k}", lines.get((name, k)))
        sec = {}
        for k, (typ, default) in keys.items():
            if k in raw:
                sec[k] = _coerce(raw[k], typ, f"{name}.{k}", lines.get((name, k)))
            elif default is _REQUIRED:
                raise ConfigError(f"missing key {name}.{k}", lines.get((name,)))
            else:
                sec[k] = copy.deepcopy(default)
        sections[name] = sec
    _validate_ranges(sections, lines)
    cfg = RunConfig(sections)
    try:
        cfg.model()
    except ValidationError as exc:
        raise ConfigError(f"model: {exc}", lines.get(("model",))) from None
    return cfg


def serialize_config(cfg):
    return yaml.safe_dump(cfg.sections, sort_keys=False, default_flow_style=None)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def preset_text():
    return resources.files("fracspread").joinpath("data/preset.cfg").read_text()


def preset_config():
    return parse_config(preset_text())
