"""Scenario files: a small line-oriented ``key = value`` format with ``[section]`` headers.

Example::

    [model]
    format = 1
    kind = 1d

    [functions]
    g.kind = gaussian
    g.weights = 1
    g.means = 0
    g.sigmas = 0.5
    g.offset = 0.1353352832366127
    cost.kind = affine
    cost.slope = 0.5
    motivation.kind = polynomial
    motivation.coefficients = 1, 0, 1

    [parties]
    left.ideal = -0.7
    left.k = 0.6
    right.ideal = 0.7
    right.k = 0.6

Functions are named; the model uses ``g`` (voter density), ``cost`` (turnout
CDF), ``motivation`` and, in several dimensions, the optional ``phi``.  Other
names can be referenced by mixtures, products and experiments.  Comments start
with ``#``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ParseError, ValidationError
from .functions import (CostCdf, DeviationCost, Feasibility, GaussianBumps, GridPdf, Mixture,
                        Motivation, ProductPdf, QuadraticMotivation, Tabulated, mix_pdfs,
                        normalize_pdf)

FORMAT_VERSION = 1
SECTIONS = ("model", "functions", "parties", "solver", "experiment", "types")
COMMANDS = {"solve": "1d", "sweep": "1d", "elasticity": "1d", "distperturb": "1d",
            "mixpath": "1d", "solve-nd": "nd", "phi-sweep": "nd", "bne": "bne"}

# value kinds: s = string, i = int, f = float, F = list of floats, S = list of names, V = float or list
FIXED_KEYS = {
    "model": {"format": "i", "kind": "s", "name": "s"},
    "parties": {"left.ideal": "V", "left.k": "f", "right.ideal": "V", "right.k": "f"},
    "solver": {"nodes": "i", "tolerance": "f", "region": "s", "order": "i", "max_iter": "i"},
    "experiment": {"command": "s", "param": "s", "from": "f", "to": "f", "steps": "i",
                   "epsilon": "f", "gamma": "f", "side": "s", "toward": "s", "away": "s",
                   "mix_from": "s", "mix_to": "s", "lambdas": "F", "alpha": "f"},
    "types": {"candidates": "S", "prior": "F", "noise": "f", "noise_right": "f", "metric": "s",
              "radius": "f", "center": "s", "count": "i", "seed": "i"},
}
FUNCTION_ATTRS = {
    "gaussian": {"weights": "F", "means": "F", "sigmas": "F", "offset": "f"},
    "tabulated": {"grid": "F", "values": "F"},
    "mixture": {"components": "S", "weights": "F", "lam": "f"},
    "product": {"factors": "S"},
    "affine": {"slope": "f", "intercept": "f"},
    "identity": {},
    "polynomial": {"coefficients": "F"},
    "quadratic": {"constant": "f", "quadratic": "F", "linear": "F"},
    "linear": {"gradient": "F", "scale": "f"},
}
PDF_KINDS = ("gaussian", "tabulated", "mixture")


@dataclass
class ScenarioFile:
    """Parsed scenario: typed values per section plus the model object they describe."""

    sections: dict[str, dict[str, Any]]
    model: Any = None
    source: str | None = None
    positions: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def kind(self) -> str:
        return self.sections["model"]["kind"]

    @property
    def experiment(self) -> dict[str, Any]:
        return self.sections.get("experiment", {})

    @property
    def types(self) -> dict[str, Any]:
        return self.sections.get("types", {})

    def function(self, name: str):
        return _Builder(self).function(name)


def _number(text: str, kind: str, where: tuple[int, int]):
    try:
        if kind == "i":
            return int(text)
        if kind == "f":
            return float(text)
        if kind in ("F", "V"):
            items = [float(t) for t in text.split(",")]
            return items[0] if kind == "V" and len(items) == 1 else items
        if kind == "S":
            return [t.strip() for t in text.split(",") if t.strip()]
        return text
    except ValueError:
        raise ParseError(f"cannot read {text!r} as {'an integer' if kind == 'i' else 'a number'}",
                         *where) from None


def _key_kind(section: str, key: str, where, kinds_seen: dict[str, str]) -> str:
    if section == "functions":
        name, dot, attr = key.partition(".")
        if not dot or not name or not attr:
            raise ParseError(f"function keys look like name.attribute, got {key!r}", *where)
        if attr == "kind":
            return "s"
        kind = kinds_seen.get(name)
        if kind is None:
            raise ParseError(f"{name}.kind must come before {key}", *where)
        attrs = FUNCTION_ATTRS[kind]
        if attr not in attrs:
            raise ParseError(f"unknown key {key!r} for a {kind} function", *where)
        return attrs[attr]
    allowed = FIXED_KEYS[section]
    if key not in allowed:
        raise ParseError(f"unknown key {key!r} in [{section}]", *where)
    return allowed[key]


def parse_scenario(text: str, source: str | None = None) -> ScenarioFile:
    """Parse and validate scenario text; the returned file carries the built model."""
    sections: dict[str, dict[str, Any]] = {}
    positions: dict[tuple[str, str], tuple[int, int]] = {}
    kinds_seen: dict[str, str] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError("section header is missing ']'", lineno, col)
            current = stripped[1:-1].strip()
            if current not in SECTIONS:
                raise ParseError(f"unknown section [{current}]", lineno, col)
            if current in sections:
                raise ParseError(f"section [{current}] appears twice", lineno, col)
            sections[current] = {}
            continue
        if current is None:
            raise ParseError("key outside of any section", lineno, col)
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", lineno, col)
        eq = line.index("=")
        key, value = line[:eq].strip(), line[eq + 1:].strip()
        vcol = eq + 2 + len(line[eq + 1:]) - len(line[eq + 1:].lstrip())
        if not value:
            raise ParseError(f"missing value for {key!r}", lineno, vcol)
        if key in sections[current]:
            raise ParseError(f"duplicate key {key!r}", lineno, col)
        kind = _key_kind(current, key, (lineno, col), kinds_seen)
        typed = _number(value, kind, (lineno, vcol))
        if current == "functions" and key.endswith(".kind"):
            if typed not in FUNCTION_ATTRS:
                raise ParseError(f"unknown function kind {typed!r}", lineno, vcol)
            kinds_seen[key[:-5]] = typed
        sections[current][key] = typed
        positions[(current, key)] = (lineno, vcol)
    if "model" not in sections:
        raise ParseError("missing [model] section", 1, 1)
    model = sections["model"]
    if model.get("format") != FORMAT_VERSION:
        raise ParseError(f"format = {FORMAT_VERSION} is required", *positions.get(("model", "format"), (1, 1)))
    if model.get("kind") not in ("1d", "nd", "bne"):
        raise ParseError("model kind must be 1d, nd or bne", *positions.get(("model", "kind"), (1, 1)))
    sf = ScenarioFile(sections, source=source, positions=positions)
    sf.model = build(sf)
    return sf


def load_scenario(path: str | Path) -> ScenarioFile:
    path = Path(path)
    return parse_scenario(path.read_text(), source=str(path))


def _format(value) -> str:
    if isinstance(value, list):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_scenario(sf: ScenarioFile) -> str:
    """Canonical text form; parsing it gives back the same sections."""
    out = []
    for name in SECTIONS:
        if name not in sf.sections:
            continue
        out.append(f"[{name}]")
        out.extend(f"{k} = {_format(v)}" for k, v in sf.sections[name].items())
        out.append("")
    return "\n".join(out)


class _Builder:
    def __init__(self, sf: ScenarioFile):
        self.sf = sf
        self.funcs = sf.sections.get("functions", {})
        self.cache: dict[str, Any] = {}
        self.stack: list[str] = []

    def _get(self, name: str, attr: str, default=None, required=True):
        key = f"{name}.{attr}"
        if key in self.funcs:
            return self.funcs[key]
        if required and default is None:
            raise ValidationError(f"function {name!r} needs {key}")
        return default

    def function(self, name: str):
        if name in self.cache:
            return self.cache[name]
        if f"{name}.kind" not in self.funcs:
            raise ValidationError(f"no function named {name!r} in [functions]")
        if name in self.stack:
            raise ValidationError(f"function {name!r} refers to itself")
        self.stack.append(name)
        kind = self.funcs[f"{name}.kind"]
        get = lambda attr, default=None: self._get(name, attr, default)
        if kind == "gaussian":
            obj = normalize_pdf(GaussianBumps(get("weights"), get("means"), get("sigmas"),
                                              get("offset", 0.0)))
        elif kind == "tabulated":
            obj = normalize_pdf(Tabulated(get("grid"), get("values")))
        elif kind == "mixture":
            parts = [self.function(c) for c in get("components")]
            lam = self._get(name, "lam", required=False)
            if lam is not None:
                if len(parts) != 2:
                    raise ValidationError(f"{name}.lam needs exactly two components")
                obj = mix_pdfs(parts[0], parts[1], lam)
            else:
                obj = normalize_pdf(Mixture(tuple(parts), get("weights")))
        elif kind == "product":
            obj = ProductPdf(tuple(self.function(f) for f in get("factors")))
        elif kind == "affine":
            obj = CostCdf(get("slope"), get("intercept", 0.0))
        elif kind == "identity":
            obj = CostCdf(1.0, kind="identity")
        elif kind == "polynomial":
            obj = Motivation(get("coefficients"))
        elif kind == "quadratic":
            obj = QuadraticMotivation(get("constant"), get("quadratic"),
                                      self._get(name, "linear", required=False))
        elif kind == "linear":
            obj = Feasibility(get("gradient"), get("scale", 1.0))
        else:  # pragma: no cover - rejected by the parser
            raise ValidationError(f"unknown function kind {kind!r}")
        self.stack.pop()
        self.cache[name] = obj
        return obj

    def require(self, name: str, kinds: tuple[str, ...]):
        obj = self.function(name)
        if self.funcs[f"{name}.kind"] not in kinds:
            raise ValidationError(f"{name!r} must be one of the kinds {kinds}")
        return obj

    def deviation(self, side: str) -> DeviationCost:
        parties = self.sf.sections.get("parties", {})
        for attr in ("ideal", "k"):
            if f"{side}.{attr}" not in parties:
                raise ValidationError(f"[parties] needs {side}.{attr}")
        ideal = parties[f"{side}.ideal"]
        return DeviationCost(parties[f"{side}.k"], tuple(ideal) if isinstance(ideal, list) else ideal)


def build(sf: ScenarioFile):
    """Construct the model object a scenario file describes."""
    from .model1d import Scenario1D
    b = _Builder(sf)
    kind = sf.kind
    solver = sf.sections.get("solver", {})
    if kind in ("1d", "bne"):
        scenario = Scenario1D(b.require("g", PDF_KINDS), b.require("cost", ("affine", "identity")),
                              b.require("motivation", ("polynomial",)), b.deviation("left"),
                              b.deviation("right"), nodes=solver.get("nodes", 64),
                              tolerance=solver.get("tolerance", 1e-10))
        for key in ("toward", "away", "mix_from", "mix_to"):
            if key in sf.experiment:
                b.require(sf.experiment[key], PDF_KINDS)
        if kind == "1d":
            return scenario
        return scenario, _type_model(sf, b, scenario)
    from .multidim import ScenarioND
    phi = b.require("phi", ("linear",)) if "phi.kind" in b.funcs else None
    return ScenarioND(b.require("g", ("product",)), b.require("cost", ("affine", "identity")),
                      b.require("motivation", ("quadratic",)), b.deviation("left"),
                      b.deviation("right"), phi, solver.get("region", "bisector"),
                      solver.get("order", 24))


def _type_model(sf: ScenarioFile, b: _Builder, scenario, seed: int | None = None):
    from .bne import TypeModel, build_type_model
    t = sf.types
    if not t:
        raise ValidationError("a bne scenario needs a [types] section")
    noise = t.get("noise", 0.0)
    metric = t.get("metric", "JS")
    if "candidates" in t:
        cands = [b.require(c, PDF_KINDS) for c in t["candidates"]]
        return TypeModel.from_candidates(cands, t.get("prior"), noise, t.get("noise_right"),
                                         metric, t.get("radius"))
    center = b.require(t.get("center", "g"), PDF_KINDS)
    return build_type_model(center, metric, t.get("radius", 0.02), t.get("count", 3), noise,
                            t.get("seed", 0) if seed is None else seed, t.get("noise_right"))


def type_model(sf: ScenarioFile, seed: int | None = None):
    """Rebuild the type model, optionally with a different candidate-generation seed."""
    b = _Builder(sf)
    return _type_model(sf, b, sf.model[0], seed)
