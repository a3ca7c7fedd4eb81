"""INI-style scenario and model files.

A scenario file looks like::

    [scenario]
    name = my-run
    t_end = 4.0

    [nodes]
    masses = 0.01, 1.5

    [rayleigh]
    alpha = 0.1
    beta = 0.001

    [spring.1]
    nodes = 0, 1
    k0 = 825
    gamma = 2.421

    [controller]
    observation = modal
    index = 1

Springs and constraints use numbered sections (``[spring.N]``,
``[constraint.N]``). A ``preset`` key in ``[scenario]`` starts from a
built-in scenario and overrides only the sections that are present.
Unknown sections or keys raise ``ConfigError``.
"""

from __future__ import annotations

import configparser
import math
from pathlib import Path

from .control import ControllerSettings, ObservationVariable
from .errors import ConfigError, StiffmodError
from .excitation import Excitation, InitialCondition
from .model import Constraint, SpringElement, SystemModel

SECTION_KEYS = {
    "scenario": {"name", "preset", "description", "t_end", "dt", "method", "primary_mode", "output_stride"},
    "nodes": {"masses"},
    "rayleigh": {"alpha", "beta"},
    "spring": {"nodes", "k0", "gamma"},
    "constraint": {"kind", "nodes", "phase"},
    "initial": {"kind", "u", "v", "mode", "node", "value"},
    "excitation": {"kind", "f_max", "f", "f0", "f1", "t1", "node"},
    "controller": {"enabled", "observation", "index", "basis", "mode", "dwell", "tolerance",
                   "initial_phase", "idle_phase", "window"},
}
MODEL_SECTIONS = {"nodes", "rayleigh", "spring", "constraint"}


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"expected a list of numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"expected a list of integers, got {text!r}") from None


def _section_type(name: str) -> str:
    base = name.split(".", 1)[0]
    if base not in SECTION_KEYS:
        raise ConfigError(f"unknown section [{name}]")
    numbered = base in ("spring", "constraint")
    if numbered != ("." in name):
        raise ConfigError(f"section [{name}] must be written as [{base}.N]" if numbered
                          else f"section [{name}] takes no index")
    return base


def _parse(text: str, source: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}".splitlines()[0]) from None
    for name in parser.sections():
        base = _section_type(name)
        unknown = set(parser[name]) - SECTION_KEYS[base]
        if unknown:
            raise ConfigError(f"{source}: unknown key(s) {sorted(unknown)} in [{name}]")
    return parser


def _ordered(parser, base):
    names = [s for s in parser.sections() if s.split(".", 1)[0] == base]

    def index(name):
        try:
            return int(name.split(".", 1)[1])
        except ValueError:
            raise ConfigError(f"section [{name}] needs an integer index") from None

    return [parser[s] for s in sorted(names, key=index)]


def _model_from(parser, base: SystemModel | None = None) -> SystemModel:
    present = {s.split(".", 1)[0] for s in parser.sections()}
    if not present & MODEL_SECTIONS:
        if base is None:
            raise ConfigError("no model given: need [nodes] and [spring.N] sections")
        return base
    if "nodes" not in parser:
        raise ConfigError("model needs a [nodes] section")
    masses = _floats(parser["nodes"].get("masses", ""))
    springs = []
    for sec in _ordered(parser, "spring"):
        nodes = _ints(sec.get("nodes", ""))
        if len(nodes) != 2:
            raise ConfigError(f"[{sec.name}] needs two node indices")
        springs.append(SpringElement(nodes, sec.getfloat("k0"), float(sec.get("gamma", "1"))))
    constraints = []
    for sec in _ordered(parser, "constraint"):
        nodes = _ints(sec.get("nodes", ""))
        constraints.append(Constraint(sec.get("kind", "merge"), nodes, sec.get("phase", "high")))
    ray = parser["rayleigh"] if "rayleigh" in parser else {}
    return SystemModel(
        masses=masses,
        springs=tuple(springs),
        alpha=float(ray.get("alpha", 0.0)),
        beta=float(ray.get("beta", 0.0)),
        constraints=tuple(constraints),
    )


def _initial_from(sec) -> InitialCondition:
    return InitialCondition(
        kind=sec.get("kind", "explicit"),
        u=_floats(sec.get("u", "")),
        v=_floats(sec.get("v", "")),
        mode=int(sec.get("mode", 1)),
        node=int(sec.get("node", 1)),
        value=float(sec.get("value", 0.0)),
    )


def _excitation_from(sec) -> Excitation:
    return Excitation(
        kind=sec.get("kind", "free"),
        F_max=float(sec.get("f_max", 0.0)),
        f=float(sec.get("f", 0.0)),
        f0=float(sec.get("f0", 0.0)),
        f1=float(sec.get("f1", 0.0)),
        t1=float(sec.get("t1", 1.0)),
        node=int(sec.get("node", 1)),
    )


def _controller_from(sec, base: ControllerSettings) -> ControllerSettings:
    obs = base.observation
    obs = ObservationVariable(
        kind=sec.get("observation", obs.kind),
        index=int(sec.get("index", obs.index)),
        basis=sec.get("basis", obs.basis),
    )
    window = base.window
    if "window" in sec:
        text = sec["window"].strip().lower()
        if text in ("", "none", "off"):
            window = None
        else:
            window = _floats(text)
            if len(window) != 2:
                raise ConfigError("window needs a start and a stop time")
    dwell = base.dwell
    if "dwell" in sec:
        dwell = None if sec["dwell"].strip().lower() in ("", "none", "auto") else float(sec["dwell"])
    return ControllerSettings(
        observation=obs,
        mode=sec.get("mode", base.mode),
        dwell=dwell,
        tolerance=float(sec.get("tolerance", base.tolerance)),
        initial_phase=sec.get("initial_phase", base.initial_phase),
        window=window,
        enabled=sec.getboolean("enabled", base.enabled),
        idle_phase=sec.get("idle_phase", base.idle_phase),
    )


def scenario_from_string(text: str, source: str = "<string>"):
    from .scenarios import Scenario, get_preset

    parser = _parse(text, source)
    try:
        head = parser["scenario"] if "scenario" in parser else {}
        base = get_preset(head["preset"]) if "preset" in head else None
        model = _model_from(parser, base.model if base else None)
        defaults = base or Scenario(name=Path(source).stem or "custom", model=model)
        dt = head.get("dt", None)
        fields = dict(
            name=head.get("name", defaults.name),
            model=model,
            description=head.get("description", defaults.description),
            t_end=float(head.get("t_end", defaults.t_end)),
            dt=defaults.dt if dt is None else (None if dt.strip().lower() in ("", "auto") else float(dt)),
            method=head.get("method", defaults.method),
            primary_mode=int(head.get("primary_mode", defaults.primary_mode)),
            output_stride=int(head.get("output_stride", defaults.output_stride)),
            initial=_initial_from(parser["initial"]) if "initial" in parser else defaults.initial,
            excitation=_excitation_from(parser["excitation"]) if "excitation" in parser else defaults.excitation,
            controller=(_controller_from(parser["controller"], defaults.controller)
                        if "controller" in parser else defaults.controller),
        )
        return Scenario(**fields)
    except ConfigError:
        raise
    except (StiffmodError, ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return scenario_from_string(text, str(path))


def load_model(path) -> SystemModel:
    """Read a model-only file (``[nodes]``, ``[rayleigh]``, ``[spring.N]``, ``[constraint.N]``)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    parser = _parse(text, str(path))
    extra = {s.split(".", 1)[0] for s in parser.sections()} - MODEL_SECTIONS
    if extra:
        raise ConfigError(f"{path}: model files cannot contain {sorted(extra)}")
    try:
        return _model_from(parser)
    except ConfigError:
        raise
    except (StiffmodError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _fmt(x) -> str:
    if isinstance(x, float):
        return "inf" if math.isinf(x) else repr(x)
    if isinstance(x, (tuple, list)):
        return ", ".join(_fmt(v) for v in x)
    return str(x)


def dump_scenario(scenario) -> str:
    """Serialise a scenario in the file format read by ``load_scenario``."""
    s = scenario
    lines = ["[scenario]", f"name = {s.name}"]
    if s.description:
        lines.append(f"description = {s.description}")
    lines += [f"t_end = {_fmt(float(s.t_end))}", f"dt = {'auto' if s.dt is None else _fmt(float(s.dt))}",
              f"method = {s.method}", f"primary_mode = {s.primary_mode}",
              f"output_stride = {s.output_stride}", "",
              "[nodes]", f"masses = {_fmt(s.model.masses)}", "",
              "[rayleigh]", f"alpha = {_fmt(s.model.alpha)}", f"beta = {_fmt(s.model.beta)}", ""]
    for i, sp in enumerate(s.model.springs, 1):
        lines += [f"[spring.{i}]", f"nodes = {_fmt(sp.nodes)}", f"k0 = {_fmt(sp.k0)}",
                  f"gamma = {_fmt(float(sp.gamma))}", ""]
    for i, c in enumerate(s.model.constraints, 1):
        lines += [f"[constraint.{i}]", f"kind = {c.kind}", f"nodes = {_fmt(c.nodes)}",
                  f"phase = {c.phase.name.lower()}", ""]
    ic = s.initial
    lines += ["[initial]", f"kind = {ic.kind}"]
    if ic.kind == "explicit":
        lines += [f"u = {_fmt(tuple(map(float, ic.u)))}", f"v = {_fmt(tuple(map(float, ic.v)))}"]
    else:
        lines += [f"mode = {ic.mode}", f"node = {ic.node}", f"value = {_fmt(float(ic.value))}"]
    ex = s.excitation
    lines += ["", "[excitation]", f"kind = {ex.kind}"]
    if ex.kind != "free":
        lines += [f"f_max = {_fmt(float(ex.F_max))}", f"node = {ex.node}"]
        if ex.kind == "harmonic":
            lines.append(f"f = {_fmt(float(ex.f))}")
        else:
            lines += [f"f0 = {_fmt(float(ex.f0))}", f"f1 = {_fmt(float(ex.f1))}", f"t1 = {_fmt(float(ex.t1))}"]
    c = s.controller
    lines += ["", "[controller]", f"enabled = {str(c.enabled).lower()}",
              f"observation = {c.observation.kind}", f"index = {c.observation.index}",
              f"basis = {c.observation.basis}", f"mode = {c.mode}",
              f"dwell = {'auto' if c.dwell is None else _fmt(float(c.dwell))}",
              f"tolerance = {_fmt(float(c.tolerance))}", f"initial_phase = {c.initial_phase}",
              f"idle_phase = {c.idle_phase}",
              f"window = {'none' if c.window is None else _fmt(tuple(map(float, c.window)))}", ""]
    return "\n".join(lines)


__all__ = ["load_scenario", "load_model", "scenario_from_string", "dump_scenario"]
