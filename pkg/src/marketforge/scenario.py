"""Scenario and site file ingestion.

Scenario files are JSON.  In exact mode every number is parsed to a
Fraction -- JSON literals through parse hooks, "p/q" and decimal strings
through the arithmetic -- so a scenario round-trips bit-exactly.  Validation
failures carry the path to the offending field ("space.weights[2]: ...").
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .arith import Arithmetic
from .jumpkernel import AccessibleSite, InaccessibleSite, KernelError, SiteChild
from .mrp import Driver, synthesize_driver
from .space import (
    INF,
    EnlargementPair,
    Filtration,
    Partition,
    Process,
    RandomTime,
    SampleSpace,
    SpaceError,
    build_initial_enlargement,
    build_progressive_enlargement,
    check_refinement,
    natural_filtration,
)
from .viability import Market, ViabilityError


class ScenarioError(ValueError):
    """Input document failed validation; ``path`` locates the field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def parse_document(text: str, arith: Arithmetic):
    """JSON with numbers routed through the arithmetic backend."""
    try:
        if arith.exact:
            return json.loads(text, parse_float=Fraction,
                              parse_int=lambda s: Fraction(int(s)))
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ValueError(f"not valid JSON: {err}") from None


def _num(value, path: str, arith: Arithmetic):
    try:
        return arith.parse(value)
    except (ValueError, TypeError, ZeroDivisionError) as err:
        raise ScenarioError(path, f"not a number: {err}") from None


def _require(doc, key: str, path: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ScenarioError(f"{path}.{key}" if path else key, "missing field")
    return doc[key]


def _str_list(value, path: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ScenarioError(path, "expected a list of strings")
    return value


def _process(paths_doc, path: str, space: SampleSpace, arith: Arithmetic,
             horizon: int | None = None) -> Process:
    if not isinstance(paths_doc, list) or len(paths_doc) != space.size:
        raise ScenarioError(path, f"expected one path per outcome ({space.size})")
    paths = []
    for i, raw in enumerate(paths_doc):
        if not isinstance(raw, list) or len(raw) < 2:
            raise ScenarioError(f"{path}[{i}]", "expected a path with >= 2 times")
        if horizon is not None and len(raw) != horizon + 1:
            raise ScenarioError(f"{path}[{i}]",
                                f"expected {horizon + 1} time points")
        fixed = []
        for t, v in enumerate(raw):
            if isinstance(v, list):
                fixed.append(tuple(_num(x, f"{path}[{i}][{t}][{j}]", arith)
                                   for j, x in enumerate(v)))
            else:
                fixed.append((_num(v, f"{path}[{i}][{t}]", arith),))
        paths.append(tuple(fixed))
    try:
        return Process.from_paths(space, paths)
    except SpaceError as err:
        raise ScenarioError(path, str(err)) from None


def _filtration(flow_doc, path: str, space: SampleSpace) -> Filtration:
    if not isinstance(flow_doc, list) or len(flow_doc) < 2:
        raise ScenarioError(path, "expected partitions for times 0..horizon")
    parts = []
    for t, atoms in enumerate(flow_doc):
        if not isinstance(atoms, list):
            raise ScenarioError(f"{path}[{t}]", "expected a list of atoms")
        try:
            parts.append(Partition.from_atoms(
                space, [_str_list(a, f"{path}[{t}][{k}]") for k, a in enumerate(atoms)]))
        except SpaceError as err:
            raise ScenarioError(f"{path}[{t}]", str(err)) from None
    try:
        return Filtration(space, tuple(parts))
    except SpaceError as err:
        raise ScenarioError(path, str(err)) from None


def _enlargement(doc, path: str, F: Filtration, arith: Arithmetic) -> EnlargementPair:
    kind = _require(doc, "kind", path)
    if kind == "none":
        return EnlargementPair(F, F)
    if kind == "initial":
        variable = _require(doc, "variable", path)
        if not isinstance(variable, list) or len(variable) != F.space.size:
            raise ScenarioError(f"{path}.variable",
                                f"expected one value per outcome ({F.space.size})")
        try:
            return build_initial_enlargement(F, tuple(variable))
        except SpaceError as err:
            raise ScenarioError(f"{path}.variable", str(err)) from None
    if kind == "progressive":
        times = _require(doc, "times", path)
        if not isinstance(times, list) or len(times) != F.space.size:
            raise ScenarioError(f"{path}.times",
                                f"expected one time per outcome ({F.space.size})")
        fixed = []
        for i, v in enumerate(times):
            if v == "inf":
                fixed.append(INF)
            else:
                try:
                    iv = int(v)
                except (TypeError, ValueError):
                    iv = -1
                if iv != v or iv < 0:
                    raise ScenarioError(f"{path}.times[{i}]",
                                        "expected a nonnegative integer or \"inf\"")
                fixed.append(iv)
        try:
            return build_progressive_enlargement(F, RandomTime(F.space, tuple(fixed)))
        except SpaceError as err:
            raise ScenarioError(f"{path}.times", str(err)) from None
    if kind == "explicit":
        G = _filtration(_require(doc, "flow", path), f"{path}.flow", F.space)
        pair = EnlargementPair(F, G)
        if not check_refinement(pair):
            raise ScenarioError(f"{path}.flow",
                                "expanded flow does not refine the base flow")
        return pair
    raise ScenarioError(f"{path}.kind", f"unknown enlargement kind {kind!r}")


@dataclass(frozen=True, eq=False)
class BuiltScenario:
    """A scenario resolved into engine objects."""

    name: str
    arith: Arithmetic
    space: SampleSpace
    F: Filtration
    pair: EnlargementPair
    market: Market
    driver: Driver
    carrier: Process
    structure: Process | None


def load_scenario(doc, arith: Arithmetic) -> BuiltScenario:
    """Resolve a parsed scenario document into engine objects."""
    if not isinstance(doc, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    name = doc.get("name", "scenario")
    space_doc = _require(doc, "space", "")
    outcomes = _str_list(_require(space_doc, "outcomes", "space"), "space.outcomes")
    weights_doc = _require(space_doc, "weights", "space")
    if not isinstance(weights_doc, list) or len(weights_doc) != len(outcomes):
        raise ScenarioError("space.weights", "expected one weight per outcome")
    weights = [_num(v, f"space.weights[{i}]", arith)
               for i, v in enumerate(weights_doc)]
    try:
        space = SampleSpace(tuple(outcomes), tuple(weights), arith=arith)
    except SpaceError as err:
        raise ScenarioError("space", str(err)) from None

    prices = _process(_require(doc, "prices", ""), "prices", space, arith)
    horizon = prices.horizon

    W = None
    if "driver" in doc:
        W = _process(doc["driver"], "driver", space, arith, horizon)

    if "flow" in doc:
        F = _filtration(doc["flow"], "flow", space)
        if F.horizon != horizon:
            raise ScenarioError("flow", f"expected horizon {horizon}")
    else:
        F = natural_filtration(space, [W if W is not None else prices])

    if W is not None:
        try:
            driver = Driver(W, F)
        except SpaceError as err:
            raise ScenarioError("driver", str(err)) from None
    else:
        driver = synthesize_driver(F)

    carrier = driver.W
    if "carrier" in doc:
        carrier = _process(doc["carrier"], "carrier", space, arith, horizon)

    structure = None
    if "structure" in doc:
        structure = _process(doc["structure"], "structure", space, arith, horizon)

    pair = _enlargement(doc.get("enlargement", {"kind": "none"}),
                        "enlargement", F, arith)

    try:
        market = Market(prices, F)
    except ViabilityError as err:
        raise ScenarioError("prices", str(err)) from None

    return BuiltScenario(name, arith, space, F, pair, market, driver,
                         carrier, structure)


def load_site(doc, arith: Arithmetic):
    """Resolve a parsed site document into a jump site."""
    if not isinstance(doc, dict):
        raise ScenarioError("", "site must be a JSON object")
    kind = _require(doc, "kind", "")
    if kind not in ("accessible", "inaccessible"):
        raise ScenarioError("kind", f"expected accessible|inaccessible, got {kind!r}")
    dim = _require(doc, "dim", "")
    if not isinstance(dim, (int, Fraction)) or int(dim) != dim or dim < 0:
        raise ScenarioError("dim", "expected a nonnegative integer")
    dim = int(dim)
    children_doc = _require(doc, "children", "")
    if not isinstance(children_doc, list) or not children_doc:
        raise ScenarioError("children", "expected a nonempty list")
    children = []
    for i, c in enumerate(children_doc):
        path = f"children[{i}]"
        if not isinstance(c, dict):
            raise ScenarioError(path, "expected an object")
        if ("p" in c) == ("q" in c):
            raise ScenarioError(path, "give exactly one of \"p\" or \"q\"")
        prob = _num(c.get("p", c.get("q")), f"{path}.p", arith)
        w_doc = _require(c, "w", path)
        if not isinstance(w_doc, list) or len(w_doc) != dim:
            raise ScenarioError(f"{path}.w", f"expected a length-{dim} list")
        w = tuple(_num(x, f"{path}.w[{j}]", arith) for j, x in enumerate(w_doc))
        nu = _num(_require(c, "nu", path), f"{path}.nu", arith)
        delta = _num(_require(c, "delta", path), f"{path}.delta", arith)
        children.append(SiteChild(prob, w, nu, delta))
    cls = AccessibleSite if kind == "accessible" else InaccessibleSite
    try:
        return cls(dim, tuple(children), arith=arith)
    except KernelError as err:
        raise ScenarioError("children", str(err)) from None
