"""Experiment files: INI-style key/value sections describing a whole study.

Sections and keys (defaults reproduce the 100-agent, 4-regular setup)::

    [graph]   family = k_regular | circulant | edge_list
              n_agents, degree, path, seed
    [model]   source = random | file
              path, n_hypotheses, alphabet_size, floor,
              discriminating_agents, min_kl, blind_hypotheses, seed
    [run]     true_hypothesis, mode, fixed_hypothesis, tau_mode, horizon,
              seeds, record_every, record_local, record_taus
    [output]  directory, plot, plot_agent, plot_hypothesis, threshold

Lists are comma separated. Relative paths resolve against the file's
directory. Unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .engine import RecordFlags, SharingMode, SimulationConfig, TauMode
from .errors import SpecError
from .graph import circulant, generate_k_regular, read_edge_list
from .observation import DEFAULT_FLOOR, generate_random_model, load_model, with_copied_columns


@dataclass(frozen=True)
class GraphSpec:
    family: str = "k_regular"
    n_agents: int = 100
    degree: int = 4
    path: str | None = None
    seed: int = 0


@dataclass(frozen=True)
class ModelSpec:
    source: str = "random"
    path: str | None = None
    n_hypotheses: int = 20
    alphabet_size: tuple = (500,)
    floor: float = DEFAULT_FLOOR
    discriminating_agents: tuple = (0,)
    min_kl: float = 0.0
    # agents outside discriminating_agents cannot tell these from the true hypothesis
    blind_hypotheses: tuple = ()
    seed: int = 0


@dataclass(frozen=True)
class RunSpec:
    true_hypothesis: int = 0
    mode: str = "full"
    fixed_hypothesis: int | None = None
    tau_mode: str = "global"
    horizon: int = 1000
    seeds: tuple = (0,)
    record_every: int = 1
    record_local: bool = False
    record_taus: bool = False


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    plot: bool = True
    plot_agent: int | None = None
    plot_hypothesis: int = 3
    threshold: float = 0.99


@dataclass(frozen=True)
class ExperimentSpec:
    graph: GraphSpec = field(default_factory=GraphSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    run: RunSpec = field(default_factory=RunSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    source: str | None = None

    @property
    def sharing_mode(self):
        return SharingMode.parse(self.run.mode, self.run.fixed_hypothesis)

    def with_seed(self, seed):
        seeds = (seed,) + tuple(s for s in self.run.seeds[1:] if s != seed)
        return dataclasses.replace(self, run=dataclasses.replace(self.run, seeds=seeds))

    def as_dict(self):
        return {
            "graph": dataclasses.asdict(self.graph),
            "model": dataclasses.asdict(self.model),
            "run": dataclasses.asdict(self.run),
            "output": dataclasses.asdict(self.output),
        }


SECTIONS = {"graph": GraphSpec, "model": ModelSpec, "run": RunSpec, "output": OutputSpec}
CHOICES = {
    ("graph", "family"): ("k_regular", "circulant", "edge_list"),
    ("model", "source"): ("random", "file"),
    ("run", "mode"): SharingMode.KINDS,
    ("run", "tau_mode"): tuple(m.value for m in TauMode),
}
_OPTIONAL_INT = {("run", "fixed_hypothesis"), ("output", "plot_agent")}
_PATHS = {("graph", "path"), ("model", "path")}


def default_spec_path():
    return resources.files("minrule") / "data" / "default_100_agents.ini"


def _key_lines(text):
    lines, section = {}, None
    for n, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            lines.setdefault((section, None), n)
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), n)
    return lines


def _convert(value, default, section, key, line):
    value = value.strip()
    try:
        if (section, key) in _OPTIONAL_INT:
            return None if value.lower() in ("", "none", "auto") else int(value)
        if (section, key) in _PATHS:
            return value or None
        if isinstance(default, bool):
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            items = [v.strip() for v in value.split(",") if v.strip()]
            return tuple(int(v) for v in items)
    except ValueError:
        raise SpecError(f"invalid value {value!r}", key=f"{section}.{key}", line=line) from None
    return value


def parse_spec_text(text, base_dir="."):
    """Parse experiment text; every key is validated or filled with its default."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str.lower
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise SpecError(f"malformed experiment file: {exc}") from None
    lines = _key_lines(text)
    parts = {}
    for section in parser.sections():
        cls = SECTIONS.get(section.lower())
        if cls is None:
            raise SpecError("unknown section", key=section, line=lines.get((section.lower(), None)))
        defaults = cls()
        known = {f.name: getattr(defaults, f.name) for f in dataclasses.fields(cls)}
        values = {}
        for key, raw in parser.items(section):
            line = lines.get((section.lower(), key))
            if key not in known:
                raise SpecError("unknown key", key=f"{section}.{key}", line=line)
            val = _convert(raw, known[key], section.lower(), key, line)
            choices = CHOICES.get((section.lower(), key))
            if choices is not None:
                val = val.lower()
                if val not in choices:
                    raise SpecError(f"expected one of {', '.join(choices)}", key=f"{section}.{key}", line=line)
            if (section.lower(), key) in _PATHS and val is not None:
                path = Path(base_dir) / val
                if not path.exists():
                    raise SpecError(f"file not found: {path}", key=f"{section}.{key}", line=line)
                val = str(path)
            values[key] = val
        parts[section.lower()] = cls(**values)
    spec = ExperimentSpec(**parts)
    _validate(spec, lines)
    return spec


def _validate(spec, lines):
    def fail(msg, section, key):
        raise SpecError(msg, key=f"{section}.{key}", line=lines.get((section, key)))

    g, m, r, o = spec.graph, spec.model, spec.run, spec.output
    if g.family == "edge_list" and not g.path:
        fail("edge_list family needs a path", "graph", "path")
    if g.n_agents < 1:
        fail("must be positive", "graph", "n_agents")
    if m.source == "file" and not m.path:
        fail("file source needs a path", "model", "path")
    if m.n_hypotheses < 2:
        fail("need at least 2 hypotheses", "model", "n_hypotheses")
    if not m.alphabet_size:
        fail("must not be empty", "model", "alphabet_size")
    if r.mode == "fixed" and r.fixed_hypothesis is None:
        fail("mode 'fixed' requires fixed_hypothesis", "run", "fixed_hypothesis")
    if r.horizon < 0:
        fail("must be nonnegative", "run", "horizon")
    if not r.seeds:
        fail("needs at least one seed", "run", "seeds")
    if r.record_every < 1:
        fail("must be >= 1", "run", "record_every")
    if not 0 < o.threshold < 1:
        fail("must lie in (0, 1)", "output", "threshold")


def parse_spec(path=None):
    """Load an experiment file; ``None`` loads the bundled default."""
    if path is None:
        src = default_spec_path()
        return dataclasses.replace(parse_spec_text(src.read_text()), source=str(src))
    path = Path(path)
    if not path.is_file():
        raise SpecError(f"experiment file not found: {path}")
    spec = parse_spec_text(path.read_text(), base_dir=path.parent)
    return dataclasses.replace(spec, source=str(path))


def build_network(spec):
    g = spec.graph
    if g.family == "edge_list":
        return read_edge_list(g.path)
    if g.family == "circulant":
        return circulant(g.n_agents, g.degree)
    return generate_k_regular(g.n_agents, g.degree, g.seed)


def build_model(spec, n_agents):
    m = spec.model
    if m.source == "file":
        model = load_model(m.path)
    else:
        sizes = m.alphabet_size
        if len(sizes) == 1:
            sizes = sizes * n_agents
        model = generate_random_model(
            n_agents, m.n_hypotheses, list(sizes), floor=m.floor,
            discriminating_agents=m.discriminating_agents, min_kl=m.min_kl, seed=m.seed,
        )
    if m.blind_hypotheses:
        h_true = spec.run.true_hypothesis
        targets = [h for h in m.blind_hypotheses if h != h_true]
        blind = [i for i in range(model.n_agents) if i not in m.discriminating_agents]
        model = with_copied_columns(model, blind, h_true, targets)
    return model


def make_config(spec, network, model, seed, mode=None):
    r = spec.run
    try:
        tau_mode = TauMode(r.tau_mode)
    except ValueError:
        raise SpecError("unknown tau mode", key="run.tau_mode") from None
    return SimulationConfig(
        network=network,
        model=model,
        h_true=r.true_hypothesis,
        mode=mode or spec.sharing_mode,
        tau_mode=tau_mode,
        horizon=r.horizon,
        master_seed=seed,
        record=RecordFlags(local=r.record_local, taus=r.record_taus, every=r.record_every),
    )

