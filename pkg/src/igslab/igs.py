"""Iterated graph systems: generator + gluing rules, validation, CUP checks.

An IGS couples a finite connected multigraph (the generator) with gluing
data: a gluing set of size |I|, two injections phi_plus/phi_minus from I into
the generator's vertices, and a per-edge orientation assigning the two
endpoint roles e+/e-.  Only the "simple" data model is representable here:
every edge carries the same pair of gluing maps, distinguished by its
orientation.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

from .errors import GraphError, IgsLabError, SpecFileError
from .graph_core import MultiGraph


@dataclass(frozen=True)
class GluingRules:
    """Gluing set size, boundary injections and per-edge orientation.

    orientation[j] = (plus_endpoint, minus_endpoint) for edge index j of the
    generator; the pair must list the edge's endpoints exactly once each.
    """

    gluing_size: int
    phi_plus: tuple
    phi_minus: tuple
    orientation: tuple


class IGS:
    """Generator graph together with its gluing rules."""

    def __init__(self, generator: MultiGraph, gluing: GluingRules, layout=None, name=None):
        if gluing.gluing_size < 1:
            raise IgsLabError("gluing set must be nonempty")
        if len(gluing.phi_plus) != gluing.gluing_size or len(gluing.phi_minus) != gluing.gluing_size:
            raise IgsLabError("phi_plus/phi_minus must have length gluing_size")
        for v in (*gluing.phi_plus, *gluing.phi_minus):
            generator.index(v)
        if len(gluing.orientation) != generator.n_edges:
            raise IgsLabError("orientation must cover every generator edge")
        for j, (pe, me) in enumerate(gluing.orientation):
            if {pe, me} != set(generator.edges[j]):
                raise IgsLabError(f"orientation of edge {j} does not match its endpoints")
        self.generator = generator
        self.gluing = gluing
        self.layout = dict(layout) if layout else None
        self.name = name
        self._cache: dict = {}

    # -- convenience views --------------------------------------------------

    @property
    def I_plus(self) -> tuple:
        return self.gluing.phi_plus

    @property
    def I_minus(self) -> tuple:
        return self.gluing.phi_minus

    def plus_indices(self) -> tuple[int, ...]:
        g = self.generator
        return tuple(g.index(v) for v in self.gluing.phi_plus)

    def minus_indices(self) -> tuple[int, ...]:
        g = self.generator
        return tuple(g.index(v) for v in self.gluing.phi_minus)

    def orientation_indices(self) -> tuple[tuple[int, int], ...]:
        g = self.generator
        return tuple((g.index(pe), g.index(me)) for pe, me in self.gluing.orientation)

    def L_star(self) -> int:
        return self.generator.graph_distance(self.I_plus, self.I_minus)

    def hausdorff_exponent(self) -> float:
        return math.log(self.generator.n_edges) / math.log(self.L_star())

    def __repr__(self):
        tag = self.name or "custom"
        return f"IGS({tag}: |V1|={self.generator.n_vertices}, |E1|={self.generator.n_edges}, |I|={self.gluing.gluing_size})"


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    passed: bool
    checks: list = field(default_factory=list)  # (name, status, detail)
    constants_preview: tuple | None = None  # (L_star, edge_count, Q)

    def to_dict(self):
        return {
            "passed": self.passed,
            "checks": [{"name": n, "status": s, "detail": d} for n, s, d in self.checks],
            "constants_preview": None
            if self.constants_preview is None
            else {
                "L_star": self.constants_preview[0],
                "edge_count": self.constants_preview[1],
                "Q": self.constants_preview[2],
            },
        }


def validate(igs: IGS) -> ValidationReport:
    """Check every structural condition; failures are reported, never thrown."""
    g = igs.generator
    checks = []

    def record(name, ok, detail=""):
        checks.append((name, "pass" if ok else "fail", detail))
        return ok

    record("no-loops", True, "loop edges are rejected at construction")
    connected = g.is_connected()
    record("connectivity", connected, "" if connected else "generator is not connected")

    inj_p = len(set(igs.I_plus)) == len(igs.I_plus)
    inj_m = len(set(igs.I_minus)) == len(igs.I_minus)
    record("injectivity", inj_p and inj_m, "" if inj_p and inj_m else "phi_plus or phi_minus repeats a vertex")

    ind_p = g.is_independent(igs.I_plus)
    ind_m = g.is_independent(igs.I_minus)
    record(
        "independence",
        ind_p and ind_m,
        "" if ind_p and ind_m else "a gluing image contains two adjacent vertices",
    )

    disjoint = not (set(igs.I_plus) & set(igs.I_minus))
    record("disjointness", disjoint, "" if disjoint else "images of phi_plus and phi_minus overlap")

    preview = None
    if connected and disjoint:
        dist = g.graph_distance(igs.I_plus, igs.I_minus)
        nondeg = dist >= 2
        record("non-degeneracy", nondeg, f"dist(I+, I-) = {dist}")
        if nondeg:
            q = math.log(g.n_edges) / math.log(dist)
            preview = (dist, g.n_edges, q)
    else:
        record("non-degeneracy", False, "not checkable: generator invalid")

    bad = [v for v in (*igs.I_plus, *igs.I_minus) if g.degree(v) != 1]
    record("doubling", not bad, "" if not bad else f"boundary vertices with degree != 1: {bad}")

    passed = all(s == "pass" for _, s, _ in checks)
    return ValidationReport(passed=passed, checks=checks, constants_preview=preview)


# ---------------------------------------------------------------------------
# sufficient conditions for conductive uniformity


def check_cup1(igs: IGS) -> bool:
    """Singleton gluing set."""
    return igs.gluing.gluing_size == 1


def check_cup2(igs: IGS, max_vertices: int = 64):
    """A generator automorphism swapping the two boundary injections, if any."""
    for eta in igs.generator.automorphisms(max_vertices=max_vertices):
        if all(
            eta[igs.I_plus[a]] == igs.I_minus[a] and eta[igs.I_minus[a]] == igs.I_plus[a]
            for a in range(igs.gluing.gluing_size)
        ):
            return eta
    return None


def check_cup3(igs: IGS):
    """An edge-disjoint family of geodesic boundary-to-boundary paths, if any.

    Each path must run from I+ to I- with length exactly L_star, and every
    edge of the generator must lie on exactly one path.  When such a family
    exists the counting identity |E1| = |I| * L_star is forced, which is used
    to prune the search up front.
    """
    g = igs.generator
    size = igs.gluing.gluing_size
    L = igs.L_star()
    if g.n_edges != size * L:
        return None
    minus_set = {g.index(v) for v in igs.I_minus}
    plus_list = [g.index(v) for v in igs.I_plus]
    used = [False] * g.n_edges
    paths: list[list[int]] = []

    def extend_path(i: int, vertex: int, depth: int, trail: list[int]) -> bool:
        if depth == L:
            if vertex in minus_set:
                paths.append(list(trail))
                if place_source(i + 1):
                    return True
                paths.pop()
            return False
        for j in g.incident_by_index(vertex):
            if used[j]:
                continue
            used[j] = True
            trail.append(j)
            if extend_path(i, g.other_endpoint_index(j, vertex), depth + 1, trail):
                return True
            trail.pop()
            used[j] = False
        return False

    def place_source(i: int) -> bool:
        if i == size:
            return all(used)
        return extend_path(i, plus_list[i], 0, [])

    if not place_source(0):
        return None
    # Report each path as the vertex sequence it traverses.
    out = []
    for i, trail in enumerate(paths):
        vs = [plus_list[i]]
        for j in trail:
            vs.append(g.other_endpoint_index(j, vs[-1]))
        out.append(tuple(g.vertices[k] for k in vs))
    return tuple(out)


# ---------------------------------------------------------------------------
# presets


def _lower_first(edges):
    return tuple((u, v) for u, v in edges)


def path2() -> IGS:
    g = MultiGraph([0, 1, 2], [(0, 1), (1, 2)])
    rules = GluingRules(1, (0,), (2,), _lower_first(g.edges))
    layout = {0: (0.0, 0.0), 1: (0.5, 0.0), 2: (1.0, 0.0)}
    return IGS(g, rules, layout=layout, name="path2")


def diamond() -> IGS:
    g = MultiGraph([1, 2, 3, 4, 5, 6], [(1, 2), (2, 3), (2, 4), (3, 5), (4, 5), (5, 6)])
    rules = GluingRules(1, (1,), (6,), _lower_first(g.edges))
    layout = {
        1: (0.0, 0.0),
        2: (0.25, 0.0),
        3: (0.5, 0.25),
        4: (0.5, -0.25),
        5: (0.75, 0.0),
        6: (1.0, 0.0),
    }
    return IGS(g, rules, layout=layout, name="diamond")


def theta(k: int, L: int) -> IGS:
    """k edge-disjoint strands of length L glued along shared interior rungs.

    For L > 2 the interior segments become parallel edges (one per strand),
    which keeps the strands edge-disjoint while the interior vertices are
    shared.  theta(2, 2) is the classical theta graph on five vertices.
    """
    if k < 1 or L < 2:
        raise IgsLabError("theta requires k >= 1 and L >= 2")
    us = [f"u{i + 1}" for i in range(k)]
    ws = [f"w{i + 1}" for i in range(k)]
    cs = [f"c{j + 1}" for j in range(L - 1)]
    vertices = us + [c for c in cs] + ws
    edges = []
    for i in range(k):
        chain = [us[i], *cs, ws[i]]
        for a, b in zip(chain, chain[1:]):
            edges.append((a, b))
    g = MultiGraph(vertices, edges)
    rules = GluingRules(k, tuple(us), tuple(ws), _lower_first(g.edges))
    layout = {}
    for i in range(k):
        y = 0.0 if k == 1 else -0.3 + 0.6 * i / (k - 1)
        layout[us[i]] = (0.0, y)
        layout[ws[i]] = (1.0, y)
    for j, c in enumerate(cs):
        layout[c] = ((j + 1) / L, 0.0)
    return IGS(g, rules, layout=layout, name=f"theta{k}{L}" if (k, L) == (2, 2) else f"theta({k},{L})")


def theta22() -> IGS:
    ig = theta(2, 2)
    ig.name = "theta22"
    return ig


PRESETS = {"path2": path2, "diamond": diamond, "theta22": theta22}

_THETA_RE = re.compile(r"^theta\((\d+),(\d+)\)$")


def from_preset(name: str) -> IGS:
    if name in PRESETS:
        return PRESETS[name]()
    m = _THETA_RE.match(name.replace(" ", ""))
    if m:
        return theta(int(m.group(1)), int(m.group(2)))
    raise SpecFileError(f"unknown preset: {name!r} (known: {', '.join(sorted(PRESETS))}, theta(k,L))")


# ---------------------------------------------------------------------------
# spec documents

SPEC_FIELDS = ("vertices", "edges", "gluing_size", "phi_plus", "phi_minus")


def from_spec_dict(doc: dict) -> IGS:
    for key in SPEC_FIELDS:
        if key not in doc:
            raise SpecFileError(f"missing field: {key!r}")
    vertices = doc["vertices"]
    if not isinstance(vertices, list) or not vertices:
        raise SpecFileError("field 'vertices' must be a nonempty list")
    edge_pairs = []
    orientation = []
    for i, entry in enumerate(doc["edges"]):
        if not (isinstance(entry, list) and len(entry) == 3):
            raise SpecFileError(f"edges[{i}]: expected [u, v, plus_endpoint]")
        u, v, plus = entry
        if plus not in (u, v):
            raise SpecFileError(f"edges[{i}]: plus endpoint {plus!r} is not an endpoint of the edge")
        edge_pairs.append((u, v))
        orientation.append((plus, v if plus == u else u))
    size = doc["gluing_size"]
    if not isinstance(size, int) or size < 1:
        raise SpecFileError("field 'gluing_size' must be a positive integer")
    for key in ("phi_plus", "phi_minus"):
        if not (isinstance(doc[key], list) and len(doc[key]) == size):
            raise SpecFileError(f"field {key!r} must be a list of length gluing_size")
    try:
        g = MultiGraph(vertices, edge_pairs)
        return IGS(g, GluingRules(size, tuple(doc["phi_plus"]), tuple(doc["phi_minus"]), tuple(orientation)))
    except (GraphError, IgsLabError) as exc:
        raise SpecFileError(str(exc)) from exc


def to_spec_dict(igs: IGS) -> dict:
    return {
        "vertices": list(igs.generator.vertices),
        "edges": [[u, v, pe] for (u, v), (pe, _) in zip(igs.generator.edges, igs.gluing.orientation)],
        "gluing_size": igs.gluing.gluing_size,
        "phi_plus": list(igs.gluing.phi_plus),
        "phi_minus": list(igs.gluing.phi_minus),
    }


def load_spec(path) -> IGS:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SpecFileError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecFileError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise SpecFileError(f"{path}: top level must be an object")
    try:
        return from_spec_dict(doc)
    except SpecFileError as exc:
        raise SpecFileError(f"{path}: {exc}") from exc
