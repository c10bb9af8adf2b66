"""Sectioned key-value experiment configuration.

The file format is INI as read by ``configparser``: ``[section]`` headers,
``key = value`` lines, ``#`` comments (full-line or inline). Unknown sections
or keys are rejected so typos fail loudly. Relative paths inside the config
(currently only ``output.directory``) resolve against the directory holding
the config file.

Sections and keys::

    [graph]      kind (comma list: complete|identity|ring|lazy), m,
                 self_weight (required when lazy is listed)
    [loss]       kind (logistic|ridge_quadratic|bounded_nonconvex), mu,
                 projection_radius
    [algo]       variant (A|B), T, eta | c (exactly one), seed, projected
    [data]       n, mean0, mean1, class_prob, flip_prob, dimension,
                 feature_std, seed
    [stability]  num_mc, pair_subset_size (0 = full grid), mode (comma list),
                 pair_seed
    [genexp]     reps, runs, test_size
    [bounds]     L, beta, sigma, init_gap, c   (all optional overrides)
    [output]     directory
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .datagen import MixtureSpec
from .engine import DsgdConfig, Stepsize
from .losses import make_loss
from .stability import STABILITY_MODES
from .topology import MixingMatrix, make_complete_uniform, make_identity, make_lazy_complete, make_ring

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]


class ConfigError(Exception):
    """Invalid or incomplete experiment configuration."""


_SCHEMA = {
    "graph": {"kind", "m", "self_weight"},
    "loss": {"kind", "mu", "projection_radius"},
    "algo": {"variant", "T", "eta", "c", "seed", "projected"},
    "data": {"n", "mean0", "mean1", "class_prob", "flip_prob", "dimension", "feature_std", "seed"},
    "stability": {"num_mc", "pair_subset_size", "mode", "pair_seed"},
    "genexp": {"reps", "runs", "test_size"},
    "bounds": {"L", "beta", "sigma", "init_gap", "c"},
    "output": {"directory"},
}

_GRAPH_KINDS = ("complete", "identity", "ring", "lazy")


@dataclass(frozen=True)
class GraphSection:
    kinds: tuple[str, ...]
    m: int
    self_weight: float | None


@dataclass(frozen=True)
class LossSection:
    kind: str
    mu: float | None
    projection_radius: float | None


@dataclass(frozen=True)
class AlgoSection:
    variant: str
    T: int
    stepsize: Stepsize
    seed: int
    projected: bool


@dataclass(frozen=True)
class DataSection:
    n: int
    spec: MixtureSpec
    seed: int


@dataclass(frozen=True)
class StabilitySection:
    num_mc: int
    pair_subset_size: int
    modes: tuple[str, ...]
    pair_seed: int | None


@dataclass(frozen=True)
class GenexpSection:
    reps: int
    runs: int
    test_size: int


@dataclass(frozen=True)
class BoundsSection:
    L: float | None = None
    beta: float | None = None
    sigma: float | None = None
    init_gap: float | None = None
    c: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed configuration; sections a command does not need may be None."""

    path: Path
    graph: GraphSection
    loss: LossSection | None
    algo: AlgoSection | None
    data: DataSection | None
    stability: StabilitySection | None
    genexp: GenexpSection | None
    bounds: BoundsSection = field(default_factory=BoundsSection)
    output_dir: Path = Path("out")
    raw_text: str = ""

    def build_graphs(self) -> list[tuple[str, MixingMatrix]]:
        out = []
        for kind in self.graph.kinds:
            if kind == "complete":
                out.append((kind, make_complete_uniform(self.graph.m)))
            elif kind == "identity":
                out.append((kind, make_identity(self.graph.m)))
            elif kind == "ring":
                out.append((kind, make_ring(self.graph.m)))
            elif kind == "lazy":
                if self.graph.self_weight is None:
                    raise ConfigError("graph.self_weight is required for the lazy graph")
                out.append((kind, make_lazy_complete(self.graph.m, self.graph.self_weight)))
            else:  # unreachable after parse-time validation, kept for safety
                raise ConfigError(f"graph.kind: unknown graph kind {kind!r}")
        return out

    def build_loss(self):
        sec = self.require("loss")
        try:
            return make_loss(sec.kind, mu=sec.mu, projection_radius=sec.projection_radius)
        except ValueError as exc:
            raise ConfigError(f"loss: {exc}") from exc

    def build_dsgd_config(self, record_trajectory: bool = False) -> DsgdConfig:
        sec = self.require("algo")
        return DsgdConfig(variant=sec.variant, T=sec.T, stepsize=sec.stepsize,
                          seed=sec.seed, projected=sec.projected,
                          record_trajectory=record_trajectory)

    def require(self, section: str):
        value = getattr(self, section)
        if value is None:
            raise ConfigError(f"missing required section [{section}]")
        return value


def _parse_scalar(section: str, key: str, raw: str, kind: str):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError("expected true/false")
        if kind == "floats":
            return tuple(float(p) for p in raw.split(","))
        return raw
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {kind}") from exc


class _Section:
    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.items = dict(parser.items(name)) if parser.has_section(name) else {}

    def get(self, key: str, kind: str = "str", default=None):
        if key not in self.items:
            return default
        return _parse_scalar(self.name, key, self.items[key], kind)

    def need(self, key: str, kind: str = "str"):
        if key not in self.items:
            raise ConfigError(f"missing required key {self.name}.{key}")
        return _parse_scalar(self.name, key, self.items[key], kind)


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigError on any problem."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc

    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str  # keys are case-sensitive (T, L, ...)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")

    if not parser.has_section("graph"):
        raise ConfigError("missing required section [graph]")
    g = _Section(parser, "graph")
    kinds = tuple(k.strip() for k in str(g.need("kind")).split(","))
    for k in kinds:
        if k not in _GRAPH_KINDS:
            raise ConfigError(f"graph.kind: unknown graph kind {k!r}; expected one of {_GRAPH_KINDS}")
    m = g.need("m", "int")
    if m < 1:
        raise ConfigError(f"graph.m must be >= 1, got {m}")
    self_weight = g.get("self_weight", "float")
    if "lazy" in kinds and self_weight is None:
        raise ConfigError("graph.self_weight is required when graph.kind includes 'lazy'")
    graph = GraphSection(kinds=kinds, m=m, self_weight=self_weight)

    loss = None
    if parser.has_section("loss"):
        s = _Section(parser, "loss")
        loss = LossSection(kind=s.need("kind"), mu=s.get("mu", "float"),
                           projection_radius=s.get("projection_radius", "float"))
        if loss.kind not in ("logistic", "ridge_quadratic", "bounded_nonconvex"):
            raise ConfigError(f"loss.kind: unknown loss kind {loss.kind!r}")

    algo = None
    if parser.has_section("algo"):
        s = _Section(parser, "algo")
        variant = s.need("variant")
        if variant not in ("A", "B"):
            raise ConfigError(f"algo.variant must be A or B, got {variant!r}")
        T = s.need("T", "int")
        if T < 0:
            raise ConfigError(f"algo.T must be >= 0, got {T}")
        eta = s.get("eta", "float")
        c = s.get("c", "float")
        if (eta is None) == (c is None):
            raise ConfigError("algo: exactly one of eta (constant) or c (decaying) is required")
        stepsize = Stepsize.constant(eta) if eta is not None else Stepsize.decaying(c)
        seed = s.need("seed", "int")
        if seed < 0:
            raise ConfigError(f"algo.seed must be >= 0, got {seed}")
        algo = AlgoSection(variant=variant, T=T, stepsize=stepsize, seed=seed,
                           projected=s.get("projected", "bool", False))

    data = None
    if parser.has_section("data"):
        s = _Section(parser, "data")
        n = s.need("n", "int")
        if n < 1:
            raise ConfigError(f"data.n must be >= 1, got {n}")
        dimension = s.get("dimension", "int", 2)
        defaults = MixtureSpec()
        mean0 = s.get("mean0", "floats", defaults.mean0 if dimension == 2 else None)
        mean1 = s.get("mean1", "floats", defaults.mean1 if dimension == 2 else None)
        if mean0 is None or mean1 is None:
            raise ConfigError("data.mean0 and data.mean1 are required when dimension != 2")
        seed = s.need("seed", "int")
        if seed < 0:
            raise ConfigError(f"data.seed must be >= 0, got {seed}")
        try:
            spec = MixtureSpec(mean0=tuple(mean0), mean1=tuple(mean1),
                               class_prob=s.get("class_prob", "float", defaults.class_prob),
                               flip_prob=s.get("flip_prob", "float", defaults.flip_prob),
                               dimension=dimension,
                               feature_std=s.get("feature_std", "float", defaults.feature_std))
        except ValueError as exc:
            raise ConfigError(f"data: {exc}") from exc
        data = DataSection(n=n, spec=spec, seed=seed)

    stab = None
    if parser.has_section("stability"):
        s = _Section(parser, "stability")
        modes = tuple(mode.strip() for mode in str(s.get("mode", default="per_agent_mean")).split(","))
        for mode in modes:
            if mode not in STABILITY_MODES:
                raise ConfigError(f"stability.mode: unknown mode {mode!r}; "
                                  f"expected one of {STABILITY_MODES}")
        num_mc = s.need("num_mc", "int")
        if num_mc < 1:
            raise ConfigError(f"stability.num_mc must be >= 1, got {num_mc}")
        size = s.get("pair_subset_size", "int", 0)
        if size < 0:
            raise ConfigError("stability.pair_subset_size must be >= 0 (0 = full grid)")
        stab = StabilitySection(num_mc=num_mc, pair_subset_size=size, modes=modes,
                                pair_seed=s.get("pair_seed", "int"))

    genexp = None
    if parser.has_section("genexp"):
        s = _Section(parser, "genexp")
        genexp = GenexpSection(reps=s.need("reps", "int"), runs=s.get("runs", "int", 1),
                               test_size=s.need("test_size", "int"))
        if genexp.reps < 1 or genexp.runs < 1 or genexp.test_size < 1:
            raise ConfigError("genexp.reps, genexp.runs, and genexp.test_size must be >= 1")

    b = _Section(parser, "bounds")
    bounds = BoundsSection(L=b.get("L", "float"), beta=b.get("beta", "float"),
                           sigma=b.get("sigma", "float"), init_gap=b.get("init_gap", "float"),
                           c=b.get("c", "float"))

    out_sec = _Section(parser, "output")
    out_dir = Path(out_sec.get("directory", default="out"))
    if not out_dir.is_absolute():
        out_dir = path.resolve().parent / out_dir

    return ExperimentConfig(path=path.resolve(), graph=graph, loss=loss, algo=algo,
                            data=data, stability=stab, genexp=genexp, bounds=bounds,
                            output_dir=out_dir, raw_text=text)
