"""INI run configuration.

Example::

    [anisotropy]
    family = elliptic
    params = 2, 1
    epsilon = 0.01

    [potential]
    family = quadratic
    params = 0.01, 0, 0
    # for family = sdist: base_curve = path/to/curve.json and tau = 0.1

    [solve]
    mode = constrained
    volume = 6.283185307
    n_vertices = 256
    tol = 1e-5
    # optional starting curve; otherwise random stars (constrained) or a unit circle
    init = path/to/init.json

Every field of :class:`~anisoshape.solve.SolveConfig` may be set in ``[solve]``.
Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

from .anisotropy import Anisotropy
from .curve2d import MultiCurve, load_curve
from .errors import InputError
from .potential import Potential, signed_distance_potential
from .solve import SolveConfig


@dataclass
class RunConfig:
    aniso: Anisotropy
    potential: Potential
    solve: SolveConfig
    mode: str = "constrained"
    init: MultiCurve | None = None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError as exc:
        raise InputError(f"expected numbers, got {text!r}") from exc


def _convert(value: str, kind):
    if value.strip().lower() in ("none", ""):
        return None
    if "int" in str(kind):
        return int(float(value))
    return float(value)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc
    for section in ("anisotropy", "potential"):
        if section not in cp:
            raise InputError(f"{path}: missing [{section}] section")
    root = path.parent

    an = cp["anisotropy"]
    aniso = Anisotropy(an.get("family", "iso").strip(), _floats(an.get("params", "")),
                       float(an.get("epsilon", "1e-2")))

    po = cp["potential"]
    family = po.get("family", "quadratic").strip()
    if family == "sdist":
        if "base_curve" not in po:
            raise InputError("sdist potential needs base_curve")
        base = load_curve(root / po["base_curve"])
        potential = signed_distance_potential(base, float(po.get("tau", "1.0")))
    else:
        potential = Potential(family, _floats(po.get("params", "")))

    so = cp["solve"] if "solve" in cp else {}
    known = {f.name: f.type for f in fields(SolveConfig)}
    kwargs = {}
    for key, value in so.items():
        if key in ("mode", "init"):
            continue
        if key not in known:
            raise InputError(f"unknown [solve] key {key!r}")
        try:
            kwargs[key] = _convert(value, known[key])
        except ValueError as exc:
            raise InputError(f"bad value for {key}: {value!r}") from exc
    mode = so.get("mode", "constrained" if kwargs.get("volume") is not None else "unconstrained").strip()
    if mode not in ("constrained", "unconstrained"):
        raise InputError(f"mode must be constrained or unconstrained, got {mode!r}")
    if mode == "constrained" and kwargs.get("volume") is None:
        raise InputError("constrained mode needs a volume")
    if mode == "unconstrained":
        kwargs["volume"] = None
    cfg = SolveConfig(**kwargs)
    cfg.validate()
    init = load_curve(root / so["init"]) if "init" in so else None
    return RunConfig(aniso=aniso, potential=potential, solve=cfg, mode=mode, init=init)
