"""Replacement graphs and their symbolic apparatus.

Level n is built from level n-1 by substituting a copy of the generator for
every edge and gluing copies along the boundary injections.  Each level-n
edge carries an address word of length n over the generator's edge indices;
projections truncate words, the self-similarity embeddings concatenate them,
and the gluing maps walk down the ancestor tree one gluing symbol at a time.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .errors import BuildError, GraphError
from .graph_core import MultiGraph
from .igs import IGS, validate

V_PLUS = "v+"
V_MINUS = "v-"


@dataclass
class LevelGraph:
    """One replacement graph with canonical vertex ids and address tables."""

    level: int
    graph: MultiGraph
    words: tuple  # per edge index: address word (tuple of generator edge indices)
    plus_minus: tuple  # per edge index: (plus vertex index, minus vertex index)
    vertex_keys: tuple  # per vertex index: canonical (z_index, parent_word) key, level >= 1
    raw_to_vertex: dict  # (z_index, parent_word) -> vertex index, level >= 1
    parent_proj: tuple  # per vertex index: ("v", parent vertex idx) or ("e", parent edge idx)
    boundary_plus: tuple  # vertex indices projecting to v+
    boundary_minus: tuple
    word_to_edge: dict = field(repr=False, default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return self.graph.n_vertices

    @property
    def n_edges(self) -> int:
        return self.graph.n_edges

    def vertex_label(self, i: int) -> str:
        return str(self.graph.vertices[i])

    def word_label(self, j: int) -> str:
        return ".".join(str(k) for k in self.words[j])


def _format_vertex_id(igs: IGS, key) -> str:
    z, word = key
    return f"{igs.generator.vertices[z]}|{'.'.join(str(k) for k in word)}"


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


class ReplacementSystem:
    """Builds and caches replacement graphs for one validated IGS.

    Levels are immutable once built; every query answers from the cached
    address tables, so the object is safe to share across threads after the
    levels in use have been constructed.
    """

    def __init__(self, igs: IGS, edge_cap: int = 10**6):
        report = validate(igs)
        if not report.passed:
            failed = [name for name, status, _ in report.checks if status != "pass"]
            raise BuildError(f"IGS failed validation: {', '.join(failed)}")
        self.igs = igs
        self.edge_cap = edge_cap
        self.L_star = igs.L_star()
        self._levels: list[LevelGraph] = [self._level_zero()]
        self._step_tables: dict[int, list] = {}
        self._solutions: dict = {}  # used by pharmonic.level_solution
        self._densities: dict = {}  # used by pharmonic/discrete_energy
        self._misc: dict = {}

    # -- construction -------------------------------------------------------

    def _level_zero(self) -> LevelGraph:
        g = MultiGraph([V_PLUS, V_MINUS], [(V_PLUS, V_MINUS)])
        return LevelGraph(
            level=0,
            graph=g,
            words=((),),
            plus_minus=((0, 1),),
            vertex_keys=(None, None),
            raw_to_vertex={},
            parent_proj=(None, None),
            boundary_plus=(0,),
            boundary_minus=(1,),
            word_to_edge={(): 0},
        )

    def level(self, n: int) -> LevelGraph:
        if n < 0:
            raise BuildError("level must be nonnegative")
        if self.igs.generator.n_edges**n > self.edge_cap:
            raise BuildError("level too large")
        while len(self._levels) <= n:
            self._levels.append(self._replace(self._levels[-1]))
        return self._levels[n]

    def _replace(self, lg: LevelGraph) -> LevelGraph:
        igs = self.igs
        gen = igs.generator
        n_parent_edges = lg.n_edges
        size = igs.gluing.gluing_size
        plus_imgs = igs.plus_indices()
        minus_imgs = igs.minus_indices()
        plus_set, minus_set = set(plus_imgs), set(minus_imgs)
        orient = igs.orientation_indices()

        def raw(z: int, j: int) -> int:
            return z * n_parent_edges + j

        uf = _UnionFind(gen.n_vertices * n_parent_edges)
        for v in range(lg.n_vertices):
            incident = lg.graph.incident_by_index(v)
            j0 = incident[0]
            base_plus = lg.plus_minus[j0][0] == v
            for j in incident[1:]:
                here_plus = lg.plus_minus[j][0] == v
                for a in range(size):
                    z0 = plus_imgs[a] if base_plus else minus_imgs[a]
                    z1 = plus_imgs[a] if here_plus else minus_imgs[a]
                    uf.union(raw(z0, j0), raw(z1, j))

        # Canonical representative: lexicographically least (z, parent word).
        classes: dict[int, list] = {}
        for z in range(gen.n_vertices):
            for j in range(n_parent_edges):
                classes.setdefault(uf.find(raw(z, j)), []).append((z, j))
        canon = {
            root: min((z, lg.words[j]) for z, j in members) for root, members in classes.items()
        }
        roots_sorted = sorted(classes, key=lambda r: canon[r])
        root_to_idx = {root: i for i, root in enumerate(roots_sorted)}
        vertex_keys = tuple(canon[root] for root in roots_sorted)
        vertex_ids = [_format_vertex_id(igs, key) for key in vertex_keys]

        raw_to_vertex = {}
        for root, members in classes.items():
            idx = root_to_idx[root]
            for z, j in members:
                raw_to_vertex[(z, lg.words[j])] = idx

        # Projection of each class to the parent level; every member must agree.
        parent_proj = [None] * len(roots_sorted)
        for root, members in classes.items():
            idx = root_to_idx[root]
            projs = set()
            for z, j in members:
                if z in plus_set:
                    projs.add(("v", lg.plus_minus[j][0]))
                elif z in minus_set:
                    projs.add(("v", lg.plus_minus[j][1]))
                else:
                    projs.add(("e", j))
            if len(projs) != 1:
                raise BuildError(f"inconsistent projection for class {canon[root]}: {sorted(projs)}")
            parent_proj[idx] = projs.pop()

        edge_ids = []
        words = []
        plus_minus = []
        word_to_edge = {}
        for j in range(n_parent_edges):
            parent_word = lg.words[j]
            for k in range(gen.n_edges):
                pz, mz = orient[k]
                pi = raw_to_vertex[(pz, parent_word)]
                mi = raw_to_vertex[(mz, parent_word)]
                word = parent_word + (k,)
                word_to_edge[word] = len(edge_ids)
                edge_ids.append((vertex_ids[pi], vertex_ids[mi]))
                words.append(word)
                plus_minus.append((pi, mi))

        graph = MultiGraph(vertex_ids, edge_ids)
        bp_parent = set(lg.boundary_plus)
        bm_parent = set(lg.boundary_minus)
        boundary_plus = tuple(
            i for i, proj in enumerate(parent_proj) if proj[0] == "v" and proj[1] in bp_parent
        )
        boundary_minus = tuple(
            i for i, proj in enumerate(parent_proj) if proj[0] == "v" and proj[1] in bm_parent
        )
        return LevelGraph(
            level=lg.level + 1,
            graph=graph,
            words=tuple(words),
            plus_minus=tuple(plus_minus),
            vertex_keys=vertex_keys,
            raw_to_vertex=raw_to_vertex,
            parent_proj=tuple(parent_proj),
            boundary_plus=boundary_plus,
            boundary_minus=boundary_minus,
            word_to_edge=word_to_edge,
        )

    # -- symbolic operations --------------------------------------------------

    def edge_index(self, word) -> int:
        word = tuple(word)
        return self.level(len(word)).word_to_edge[word]

    def sigma_vertex(self, word, m: int, v_idx: int) -> int:
        """Image of level-m vertex v under the embedding of cell `word`."""
        word = tuple(word)
        n = len(word)
        target = self.level(n + m)
        if m == 0:
            j = self.edge_index(word)
            side = 0 if v_idx == 0 else 1
            return self.level(n).plus_minus[j][side]
        z, w = self.level(m).vertex_keys[v_idx]
        return target.raw_to_vertex[(z, word + w)]

    def sigma_map(self, word, m: int) -> list[int]:
        """The whole embedding of V_m into V_{n+m} as an index table."""
        word = tuple(word)
        lg = self.level(m)
        if m == 0:
            j = self.edge_index(word)
            pm = self.level(len(word)).plus_minus[j]
            return [pm[0], pm[1]]
        target = self.level(len(word) + m)
        return [target.raw_to_vertex[(z, word + w)] for z, w in lg.vertex_keys]

    def cell_vertices(self, word, n: int) -> tuple[int, ...]:
        """Vertex set of the cell `word` inside level n (sorted indices)."""
        word = tuple(word)
        m = n - len(word)
        if m < 0:
            raise GraphError("cell word longer than level")
        return tuple(sorted(set(self.sigma_map(word, m))))

    def project(self, n: int, m: int, kind: str, idx: int):
        """pi_{n,m}: project a level-n vertex ("v") or edge ("e") to level m."""
        if m > n or m < 0:
            raise GraphError("projection requires 0 <= m <= n")
        if kind == "e":
            word = self.level(n).words[idx]
            return ("e", self.edge_index(word[:m])) if m < n else ("e", idx)
        if kind != "v":
            raise GraphError("kind must be 'v' or 'e'")
        k = n
        while k > m:
            proj = self.level(k).parent_proj[idx]
            k -= 1
            if proj[0] == "v":
                idx = proj[1]
            else:
                return ("e", self.edge_index(self.level(k).words[proj[1]][:m]))
        return ("v", idx)

    def step_table(self, n: int):
        """For each level-n vertex and gluing symbol, the ancestor one level down."""
        if n not in self._step_tables:
            lg = self.level(n)
            nxt = self.level(n + 1)
            size = self.igs.gluing.gluing_size
            plus_imgs = self.igs.plus_indices()
            minus_imgs = self.igs.minus_indices()
            table = []
            for v in range(lg.n_vertices):
                j = lg.graph.incident_by_index(v)[0]
                is_plus = lg.plus_minus[j][0] == v
                imgs = plus_imgs if is_plus else minus_imgs
                word = lg.words[j]
                table.append(tuple(nxt.raw_to_vertex[(imgs[a], word)] for a in range(size)))
            self._step_tables[n] = table
        return self._step_tables[n]

    def step(self, n: int, v_idx: int, a: int) -> int:
        return self.step_table(n)[v_idx][a]

    def gluing_map(self, n: int, v_idx: int, symbols) -> int:
        """Phi_{v,m}: the ancestor of v at level n+len(symbols) addressed by `symbols`."""
        out = v_idx
        k = n
        for a in symbols:
            out = self.step(k, out, a)
            k += 1
        return out

    def ancestor_table(self, n: int, v_idx: int, m: int) -> dict:
        """All ancestors of v at level n+m keyed by their gluing words."""
        size = self.igs.gluing.gluing_size
        table = {(): v_idx}
        for _ in range(m):
            table = {
                word + (a,): self.step(n + len(word), idx, a)
                for word, idx in table.items()
                for a in range(size)
            }
        return table

    def ancestors_by_projection(self, n: int, v_idx: int, m: int) -> set[int]:
        """pi^{-1}(v) computed the slow way; used to cross-check the gluing maps."""
        lg = self.level(n + m)
        return {
            w for w in range(lg.n_vertices) if self.project(n + m, n, "v", w) == ("v", v_idx)
        }

    # -- structural verification ----------------------------------------------

    def verify_sm(self, n_max: int) -> "CheckReport":
        entries = []

        def record(name, ok, detail=""):
            entries.append((name, bool(ok), detail))

        gen = self.igs.generator
        max_deg_gen = max(gen.degree(v) for v in gen.vertices)

        for n in range(n_max + 1):
            lg = self.level(n)
            record(
                f"edge-count level {n}",
                lg.n_edges == gen.n_edges**n,
                f"{lg.n_edges} vs {gen.n_edges ** n}",
            )
            max_deg = max(lg.graph.degree(v) for v in lg.graph.vertices) if n >= 1 else 1
            if n >= 1:
                record(f"degree bound level {n}", max_deg <= max_deg_gen, f"max degree {max_deg}")
            # boundary degree 1, with the unique neighbor off the boundary
            ok_deg = True
            ok_nbr = True
            witness = ""
            boundary = set(lg.boundary_plus) | set(lg.boundary_minus)
            for v in boundary:
                inc = lg.graph.incident_by_index(v)
                if len(inc) != 1:
                    ok_deg, witness = False, f"vertex {lg.vertex_label(v)}"
                    break
                nbr = lg.graph.other_endpoint_index(inc[0], v)
                if n >= 1 and nbr in boundary:
                    ok_nbr, witness = False, f"vertex {lg.vertex_label(v)}"
            record(f"boundary degree-1 level {n}", ok_deg, witness)
            if n >= 1:
                record(f"boundary neighbor interior level {n}", ok_nbr, witness)

        # step well-definedness: every incident edge yields the same class
        for n in range(n_max):
            lg = self.level(n)
            nxt = self.level(n + 1)
            size = self.igs.gluing.gluing_size
            plus_imgs, minus_imgs = self.igs.plus_indices(), self.igs.minus_indices()
            ok = True
            witness = ""
            for v in range(lg.n_vertices):
                seen = None
                for j in lg.graph.incident_by_index(v):
                    imgs = plus_imgs if lg.plus_minus[j][0] == v else minus_imgs
                    got = tuple(nxt.raw_to_vertex[(imgs[a], lg.words[j])] for a in range(size))
                    if seen is None:
                        seen = got
                    elif seen != got:
                        ok, witness = False, f"vertex {lg.vertex_label(v)} at level {n}"
            record(f"gluing well-defined level {n}", ok, witness)

        # SM1-SM3 for every split n = k + m with m >= 1
        for k in range(n_max):
            for m in range(1, n_max - k + 1):
                self._verify_sm_split(k, m, record)

        # ancestor-separation: distinct level-m vertices have far-apart ancestors
        for m in range(n_max):
            for n in range(1, n_max - m + 1):
                ok, witness = self._verify_ancestor_distance(m, n)
                record(f"ancestor distance m={m} n={n}", ok, witness)

        # gluing maps are bijections onto the projection preimages
        for n in range(n_max):
            for m in range(1, min(2, n_max - n) + 1):
                lg = self.level(n)
                ok = True
                witness = ""
                for v in range(lg.n_vertices):
                    table = self.ancestor_table(n, v, m)
                    values = set(table.values())
                    if len(values) != len(table) or values != self.ancestors_by_projection(n, v, m):
                        ok, witness = False, f"vertex {lg.vertex_label(v)} level {n} m={m}"
                        break
                record(f"gluing bijective level {n} m={m}", ok, witness)

        passed = all(ok for _, ok, _ in entries)
        return CheckReport(passed=passed, entries=entries)

    def _verify_sm_split(self, k: int, m: int, record) -> None:
        parent = self.level(k)
        child = self.level(k + m)
        images = {}
        ok_inj = True
        ok_edge = True
        witness = ""
        for j in range(parent.n_edges):
            word = parent.words[j]
            smap = self.sigma_map(word, m)
            if len(set(smap)) != len(smap):
                ok_inj, witness = False, f"cell {word}"
            images[j] = smap
            # edges map to edges with matched roles: (e.f)+- = e.(f+-)
            sub = self.level(m)
            for f in range(sub.n_edges):
                cj = child.word_to_edge[word + sub.words[f]]
                want = (smap[sub.plus_minus[f][0]], smap[sub.plus_minus[f][1]])
                if child.plus_minus[cj] != want:
                    ok_edge, witness = False, f"cell {word} edge {sub.words[f]}"
        record(f"SM1 injective k={k} m={m}", ok_inj, witness)
        record(f"SM1 edges/labels k={k} m={m}", ok_edge, witness)

        covered = set()
        for smap in images.values():
            covered.update(smap)
        record(f"SM1 covering k={k} m={m}", len(covered) == child.n_vertices, "")

        ok_sm2 = True
        witness = ""
        for j1 in range(parent.n_edges):
            for j2 in range(j1 + 1, parent.n_edges):
                s1, s2 = set(images[j1]), set(images[j2])
                shared_parent = set(parent.plus_minus[j1]) & set(parent.plus_minus[j2])
                inter = s1 & s2
                if bool(inter) != bool(shared_parent):
                    ok_sm2, witness = False, f"cells {parent.words[j1]},{parent.words[j2]}"
                    break
                expected = set()
                for v in shared_parent:
                    expected |= set(self.ancestor_table(k, v, m).values())
                if inter != expected:
                    ok_sm2, witness = False, f"cells {parent.words[j1]},{parent.words[j2]}"
                    break
            if not ok_sm2:
                break
        record(f"SM2 intersections k={k} m={m}", ok_sm2, witness)

        # SM3: address words partition level k+m edges by their length-k prefix
        prefix_counts: dict = {}
        for word in child.words:
            prefix_counts[word[:k]] = prefix_counts.get(word[:k], 0) + 1
        gen_edges = self.igs.generator.n_edges
        ok_sm3 = set(prefix_counts) == set(parent.words) and all(
            c == gen_edges**m for c in prefix_counts.values()
        )
        record(f"SM3 partition k={k} m={m}", ok_sm3, "")

    def _verify_ancestor_distance(self, m: int, n: int):
        lg = self.level(m)
        deep = self.level(m + n)
        bound = self.L_star**n
        anc = [
            sorted(self.ancestor_table(m, v, n).values()) for v in range(lg.n_vertices)
        ]
        for v in range(lg.n_vertices):
            ids = [deep.graph.vertices[i] for i in anc[v]]
            dist = deep.graph.hop_distances_from(ids)
            for w in range(lg.n_vertices):
                if w == v:
                    continue
                d = min(dist[i] for i in anc[w])
                if d < bound:
                    return False, f"vertices {lg.vertex_label(v)},{lg.vertex_label(w)}: {d} < {bound}"
        return True, ""

    # -- exports ---------------------------------------------------------------

    def to_dot(self, n: int) -> str:
        lg = self.level(n)
        lines = [f'graph level{n} {{']
        for v in lg.graph.vertices:
            lines.append(f'  "{v}";')
        for j, (u, v) in enumerate(lg.graph.edges):
            lines.append(f'  "{u}" -- "{v}" [label="{lg.word_label(j)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def address_table(self, n: int) -> dict:
        lg = self.level(n)
        return {
            "level": n,
            "vertices": [str(v) for v in lg.graph.vertices],
            "edges": [
                {
                    "word": list(lg.words[j]),
                    "plus": lg.vertex_label(lg.plus_minus[j][0]),
                    "minus": lg.vertex_label(lg.plus_minus[j][1]),
                }
                for j in range(lg.n_edges)
            ],
            "boundary_plus": [lg.vertex_label(i) for i in lg.boundary_plus],
            "boundary_minus": [lg.vertex_label(i) for i in lg.boundary_minus],
        }

    def address_table_json(self, n: int) -> str:
        return json.dumps(self.address_table(n), indent=2, sort_keys=True) + "\n"


@dataclass
class CheckReport:
    passed: bool
    entries: list  # (name, ok, detail)

    def failures(self):
        return [(n, d) for n, ok, d in self.entries if not ok]

    def to_dict(self):
        return {
            "passed": self.passed,
            "entries": [{"name": n, "ok": ok, "detail": d} for n, ok, d in self.entries],
        }


def all_words(n_letters: int, length: int):
    return itertools.product(range(n_letters), repeat=length)
