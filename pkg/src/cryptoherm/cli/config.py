"""Strict YAML experiment configuration.

A config file is a mapping with the top-level keys ``kind``, ``id``,
``model``, ``numerics``, ``output`` and ``seed``.  Unknown keys, duplicate
keys and wrongly typed values raise :class:`ConfigError` naming the dotted
field and, where known, its line in the file.

Example::

    kind: metric
    id: pt2
    model:
      label: pt-chain
      params: {n: 2, gamma: 0.5}
    numerics:
      tol: 1.0e-10
    output:
      path: pt2.json
      format: json
"""

from dataclasses import dataclass, field
import inspect
from pathlib import Path

import yaml

from ..exceptions import ConfigError
from ..models import _REGISTRY, list_models
from ..sturm import path_from_spec, potential_from_spec

__all__ = ["ExperimentConfig", "KINDS", "load_config", "parse_config"]

KINDS = ("metric", "evolve", "sturm", "susy", "scatter", "pole-scan", "fig1-table")
FORMATS = ("csv", "json")

_REQUIRED = object()


def _float(v):
    if isinstance(v, bool):
        raise TypeError
    return float(v)


def _int(v):
    if isinstance(v, bool) or not float(v).is_integer():
        raise TypeError
    return int(v)


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError
    return v


def _str(v):
    if not isinstance(v, str):
        raise TypeError
    return v


def _floats(n=None):
    def conv(v):
        if not isinstance(v, (list, tuple)) or (n is not None and len(v) != n):
            raise TypeError
        return [_float(x) for x in v]

    conv.__name__ = f"list of {n} floats" if n else "list of floats"
    return conv


def _optional(conv):
    def wrapped(v):
        return None if v is None else conv(v)

    wrapped.__name__ = getattr(conv, "__name__", "value")
    return wrapped


_float.__name__, _int.__name__, _bool.__name__, _str.__name__ = "float", "integer", "boolean", "string"

# kind -> {key: (converter, default)}
NUMERICS = {
    "metric": {
        "tol": (_float, 1e-10),
        "theta_range": (_optional(_int), None),
        "random_instances": (_int, 0),
        "random_dim": (_int, 8),
    },
    "evolve": {
        "family": (_str, "rotating"),
        "frequency": (_float, 0.7),
        "window": (_floats(2), [0.0, 10.0]),
        "n_report": (_int, 101),
        "tol": (_float, 1e-8),
        "psi0": (_floats(2), [1.0, 0.0]),
        "drift_tol": (_float, 1e-6),
        "pullback_tol": (_float, 1e-6),
    },
    "sturm": {
        "path": (_str, _REQUIRED),
        "potential": (_str, _REQUIRED),
        "box": (_floats(2), _REQUIRED),
        "n": (_int, _REQUIRED),
        "k": (_int, 5),
        "tol": (_float, 1e-10),
        "level_tol": (_optional(_float), None),
    },
    "susy": {
        "zero_tol": (_float, 1e-6),
        "match_tol": (_float, 1e-8),
        "intertwining_tol": (_float, 1e-12),
        "expected_zero_modes": (_optional(_int), None),
    },
    "scatter": {
        "energies": (_floats(3), _REQUIRED),
        "weighted": (_bool, False),
        "tol": (_float, 1e-8),
        "hermitian_tol": (_float, 1e-10),
    },
    "pole-scan": {
        "window": (_floats(4), _REQUIRED),
        "grid_density": (_int, 60),
        "tol": (_float, 1e-8),
        "match_tol": (_float, 1e-5),
    },
    "fig1-table": {
        "gammas": (_floats(3), _REQUIRED),
        "k": (_int, 6),
        "L": (_float, 8.0),
        "n": (_int, 1000),
        "spacing_tol": (_float, 0.05),
    },
}

_NEEDS_MODEL = {"metric", "susy", "scatter", "pole-scan"}
_TOP = {"kind", "id", "model", "numerics", "output", "seed"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment settings.

    ``energies`` and ``gammas`` sweeps are ``[start, stop, num]`` and
    ``[start, stop, step]`` respectively.
    """

    kind: str
    id: str
    model: dict = None
    numerics: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    seed: int = 0
    source: str = None

    def resolved(self):
        """Plain-data view embedded in every output header."""
        return {
            "kind": self.kind,
            "id": self.id,
            "model": self.model,
            "numerics": self.numerics,
            "output": self.output,
            "seed": self.seed,
        }


def _key_lines(node, prefix="", lines=None):
    """Map dotted key paths to line numbers; reject duplicate keys."""
    if lines is None:
        lines = {}
    if isinstance(node, yaml.MappingNode):
        seen = set()
        for k, v in node.value:
            key = k.value
            path = f"{prefix}.{key}" if prefix else key
            line = k.start_mark.line + 1
            if key in seen:
                raise ConfigError("duplicate key", field=path, line=line)
            seen.add(key)
            lines[path] = line
            _key_lines(v, path, lines)
    return lines


class _Ctx:
    def __init__(self, lines):
        self.lines = lines

    def error(self, message, path):
        line = self.lines.get(path)
        if line is None and "." in path:
            line = self.lines.get(path.rsplit(".", 1)[0])
        raise ConfigError(message, field=path, line=line)

    def mapping(self, value, path):
        if not isinstance(value, dict):
            self.error("expected a mapping", path)
        return value

    def reject_unknown(self, data, allowed, prefix):
        for key in data:
            if key not in allowed:
                path = f"{prefix}.{key}" if prefix else str(key)
                self.error(f"unknown key; allowed: {sorted(allowed)}", path)


def _section(ctx, data, spec, prefix):
    data = ctx.mapping({} if data is None else data, prefix)
    ctx.reject_unknown(data, spec, prefix)
    out = {}
    for key, (conv, default) in spec.items():
        path = f"{prefix}.{key}"
        if key not in data:
            if default is _REQUIRED:
                ctx.error("missing required field", path)
            out[key] = default
            continue
        try:
            out[key] = conv(data[key])
        except (TypeError, ValueError):
            ctx.error(f"expected {conv.__name__}, got {data[key]!r}", path)
    return out


def _model(ctx, data):
    data = ctx.mapping(data, "model")
    ctx.reject_unknown(data, {"label", "params"}, "model")
    if "label" not in data:
        ctx.error("missing required field", "model.label")
    label = data["label"]
    if label not in list_models():
        ctx.error(f"unknown model {label!r}; known: {list_models()}", "model.label")
    params = ctx.mapping(data.get("params") or {}, "model.params")
    if label.startswith("susy:"):
        allowed = {"x_min", "x_max", "n"}
    else:
        allowed = set(inspect.signature(_REGISTRY[label]).parameters)
    ctx.reject_unknown(params, allowed, "model.params")
    return {"label": label, "params": dict(params)}


def parse_config(text, source=None):
    """Parse YAML ``text`` into an :class:`ExperimentConfig`."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {exc}", line=mark.line + 1 if mark else None) from None
    ctx = _Ctx(_key_lines(node) if node is not None else {})
    data = ctx.mapping(data, "<root>")
    ctx.reject_unknown(data, _TOP, "")
    if "kind" not in data:
        ctx.error("missing required field", "kind")
    kind = data["kind"]
    if kind not in KINDS:
        ctx.error(f"unknown experiment kind {kind!r}; known: {list(KINDS)}", "kind")

    model = None
    if kind in _NEEDS_MODEL:
        if "model" not in data:
            ctx.error("missing required field", "model")
        model = _model(ctx, data["model"])
    elif "model" in data:
        ctx.error(f"kind {kind!r} takes no model section", "model")

    numerics = _section(ctx, data.get("numerics"), NUMERICS[kind], "numerics")
    _check_numerics(ctx, kind, numerics)

    default_id = Path(source).stem if source else kind
    exp_id = data.get("id", default_id)
    if not isinstance(exp_id, str) or not exp_id or "/" in exp_id:
        ctx.error("id must be a non-empty string without '/'", "id")

    output = _section(
        ctx, data.get("output"), {"path": (_optional(_str), None), "format": (_str, "csv")}, "output"
    )
    if output["format"] not in FORMATS:
        ctx.error(f"format must be one of {list(FORMATS)}", "output.format")

    seed = data.get("seed", 0)
    try:
        seed = _int(seed)
    except (TypeError, ValueError):
        ctx.error(f"expected integer, got {seed!r}", "seed")
    return ExperimentConfig(kind, exp_id, model, numerics, output, seed, source)


def _check_numerics(ctx, kind, num):
    if kind == "sturm":
        for key, parse in (("path", path_from_spec), ("potential", potential_from_spec)):
            try:
                parse(num[key])
            except (KeyError, ValueError) as exc:
                ctx.error(str(exc), f"numerics.{key}")
        if num["n"] < 3:
            ctx.error("grid size must be at least 3", "numerics.n")
    if kind == "scatter" and (num["energies"][2] < 0 or not float(num["energies"][2]).is_integer()):
        ctx.error("energies is [start, stop, num] with integer num >= 0", "numerics.energies")
    if kind == "fig1-table" and num["gammas"][2] <= 0:
        ctx.error("gammas is [start, stop, step] with step > 0", "numerics.gammas")
    if kind == "evolve" and num["family"] != "rotating":
        ctx.error("only the 'rotating' family is available", "numerics.family")


def load_config(path):
    """Read and parse a config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, source=str(path))
