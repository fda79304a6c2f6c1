"""Plain ``key = value`` run configuration.

Layout::

    [grid]          x0, dx, n          (sine-Gordon grid)
    [lattice]       j0, n              (Toda window)
    [system]        a, delta, kappa, gamma_phase
    [perturbation]  kind, amplitude, width, center, seed
    [experiment]    T, dt, stride, c_max, order
    [output]        out_dir, format

``kappa`` and ``gamma_phase`` accept comma-separated lists (one entry per
soliton); a missing ``gamma_phase`` means all phases zero. ``#`` starts a
comment. Every key is optional. Parsing uses :mod:`configparser` in a
restricted dialect (``=`` only, no interpolation, no continuation lines);
this module adds typing, validation and line numbers for error messages.
"""

import configparser
import math
import re
from dataclasses import dataclass

from .errors import ConfigError
from .stability import KINDS

FORMATS = ("csv", "json")


def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("value must be finite")
    return v


def _int(s: str) -> int:
    return int(s, 0)


def _floats(s: str) -> tuple:
    parts = [p.strip() for p in s.split(",")]
    if not all(parts):
        raise ValueError("empty list entry")
    return tuple(_float(p) for p in parts)


# section -> key -> (parser, default)
SCHEMA = {
    "grid": {"x0": (_float, -40.0), "dx": (_float, 0.05), "n": (_int, 1601)},
    "lattice": {"j0": (_int, -100), "n": (_int, 201)},
    "system": {
        "a": (_float, 0.5),
        "delta": (_float, 0.0),
        "kappa": (_floats, (1.0,)),
        "gamma_phase": (_floats, None),
    },
    "perturbation": {
        "kind": (str, "auto"),
        "amplitude": (_float, 1e-2),
        "width": (_float, 1.0),
        "center": (_float, 0.0),
        "seed": (_int, 0),
    },
    "experiment": {
        "T": (_float, 50.0),
        "dt": (_float, 0.01),
        "stride": (_int, 100),
        "c_max": (_float, 5.0),
        "order": (_int, 2),
    },
    "output": {"out_dir": (str, "out"), "format": (str, "csv")},
}


@dataclass(frozen=True)
class Config:
    """Validated configuration; ``values[section][key]`` holds typed values."""

    values: dict

    def __getitem__(self, dotted: str):
        sec, key = dotted.split(".")
        return self.values[sec][key]

    def as_dict(self) -> dict:
        return {s: {k: (list(v) if isinstance(v, tuple) else v) for k, v in kv.items()}
                for s, kv in self.values.items()}


_HEADER = re.compile(r"^\s*\[([^\]]*)\]")
_ENTRY = re.compile(r"^\s*([^=#\s][^=]*?)\s*=")


def _line_index(text: str) -> tuple[dict, dict]:
    """Line numbers of section headers and of ``(section, key)`` entries."""
    heads, keys, sec = {}, {}, None
    for no, line in enumerate(text.splitlines(), 1):
        m = _HEADER.match(line)
        if m:
            sec = m.group(1).strip()
            heads.setdefault(sec, no)
            continue
        m = _ENTRY.match(line)
        if m and sec is not None:
            keys.setdefault((sec, m.group(1)), no)
    return heads, keys


def _read_raw(text: str) -> tuple[dict, dict]:
    cp = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
        empty_lines_in_values=False,
        default_section="\0",
    )
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("entry outside any [section]", exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", exc.lineno) from None
    except configparser.ParsingError as exc:
        no = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line (expected 'key = value')", no) from None
    heads, lines = _line_index(text)
    raw = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", heads.get(sec))
        for key, val in cp.items(sec):
            if "\n" in val:
                raise ConfigError(f"continuation lines are not allowed (key {key!r})",
                                  lines.get((sec, key)))
            raw[(sec, key)] = val
    return raw, lines


def _resolve_override(item: str) -> tuple[str, str, str]:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    name, val = (p.strip() for p in item.split("=", 1))
    if "." in name:
        sec, key = name.split(".", 1)
        if sec not in SCHEMA or key not in SCHEMA[sec]:
            raise ConfigError(f"unknown key {name!r} in --set")
        return sec, key, val
    owners = [s for s, kv in SCHEMA.items() if name in kv]
    if not owners:
        raise ConfigError(f"unknown key {name!r} in --set")
    if len(owners) > 1:
        raise ConfigError(f"key {name!r} is ambiguous in --set; use one of "
                          + ", ".join(f"{s}.{name}" for s in owners))
    return owners[0], name, val


def parse_config(text: str = "", overrides=()) -> Config:
    """Parse, apply ``--set`` style overrides and validate.

    Raises
    ------
    ConfigError
        With the offending line number when it comes from ``text``.
    """
    raw, lines = _read_raw(text)
    for item in overrides:
        sec, key, val = _resolve_override(item)
        raw[(sec, key)] = val
        lines.pop((sec, key), None)
    values = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (conv, default) in keys.items():
            if (sec, key) in raw:
                try:
                    values[sec][key] = conv(raw[(sec, key)])
                except ValueError as exc:
                    raise ConfigError(f"bad value for {sec}.{key}: {raw[(sec, key)]!r} ({exc})",
                                      lines.get((sec, key))) from None
            else:
                values[sec][key] = default
    for (sec, key) in raw:
        if key not in SCHEMA[sec]:
            raise ConfigError(f"unknown key {key!r} in [{sec}]", lines.get((sec, key)))
    if values["system"]["gamma_phase"] is None:
        values["system"]["gamma_phase"] = (0.0,) * len(values["system"]["kappa"])
    _validate(values, lines)
    return Config(values)


def _validate(v: dict, lines: dict):
    def need(ok, sec, key, msg):
        if not ok:
            raise ConfigError(f"{sec}.{key}: {msg}", lines.get((sec, key)))

    need(v["grid"]["dx"] > 0, "grid", "dx", "must be > 0")
    need(v["grid"]["n"] >= 2, "grid", "n", "must be >= 2")
    need(v["lattice"]["n"] >= 2, "lattice", "n", "must be >= 2")
    s = v["system"]
    need(s["a"] > 0, "system", "a", "must be > 0")
    need(all(k > 0 for k in s["kappa"]), "system", "kappa", "entries must be > 0")
    need(len(s["gamma_phase"]) == len(s["kappa"]), "system", "gamma_phase",
         "needs one entry per kappa")
    p = v["perturbation"]
    need(p["kind"] in ("auto",) + KINDS, "perturbation", "kind",
         "must be one of " + ", ".join(("auto",) + KINDS))
    need(p["amplitude"] >= 0, "perturbation", "amplitude", "must be >= 0")
    need(p["width"] > 0, "perturbation", "width", "must be > 0")
    need(0 <= p["seed"] < 2**64, "perturbation", "seed", "must fit in 64 unsigned bits")
    e = v["experiment"]
    need(e["T"] > 0, "experiment", "T", "must be > 0")
    need(e["dt"] > 0, "experiment", "dt", "must be > 0")
    need(e["stride"] >= 1, "experiment", "stride", "must be >= 1")
    need(e["c_max"] > 0, "experiment", "c_max", "must be > 0")
    need(e["order"] in (2, 4), "experiment", "order", "must be 2 or 4")
    o = v["output"]
    need(bool(o["out_dir"]), "output", "out_dir", "must not be empty")
    need(o["format"] in FORMATS, "output", "format", "must be one of " + ", ".join(FORMATS))


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def serialize(cfg: Config) -> str:
    """Text that :func:`parse_config` maps back to an equal :class:`Config`."""
    out = []
    for sec, keys in cfg.values.items():
        out.append(f"[{sec}]")
        out += [f"{k} = {_fmt(val)}" for k, val in keys.items()]
        out.append("")
    return "\n".join(out)
