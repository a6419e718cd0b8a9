"""The coset graph of (G, G_[0,1/2]) for G in {F, T, V}.

A vertex is a coset of the subgroup H of elements acting as the identity
on [0,1/2).  Two elements g, g' lie in the same left coset gH exactly when
they restrict to the same function on [0,1/2), so the canonical vertex key
*is* the restriction: a normalized sequence of affine patches partitioning
[0,1/2).  No coset representatives or word normal forms are ever needed.

Left cosets with the left generator action are used throughout; the
right-coset graph is isomorphic via g -> g^-1 with generators inverted,
so nothing is lost.  Generator transitions are post-composition on the
patches; covering translations (elements supported in [0,1/2), which
normalize H) act by pre-composition and commute with every transition.

States are encoded as flat tuples of integer 5-tuples
(dk, dn, e, cm, ce): the patch x -> 2^e x + cm/2^ce on [dk/2^dn, (dk+1)/2^dn).
That keeps balls of ~10^6 vertices affordable in pure Python.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .dyadic import StdInterval
from .elements import (
    AffinePatch,
    CellMap,
    class_le,
    merge_patch_keys,
    standard_generator,
    supported_copy,
)
from .dyadic import LEFT_HALF, RIGHT_HALF

__all__ = [
    "CosetState",
    "CosetBall",
    "ClassMismatch",
    "NotNormalizing",
    "ResourceLimit",
    "IoFailure",
    "FormatVersionMismatch",
    "state_of",
    "step",
    "translate",
    "explore",
    "default_generators",
    "subgroup_generators",
    "normalizer_elements",
    "load_ball",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 5_000_000

PatchKey = tuple[int, int, int, int, int]
StateKey = tuple[PatchKey, ...]

IDENTITY_KEY: StateKey = ((0, 1, 0, 0, 0),)


class ClassMismatch(ValueError):
    """Element's class is larger than the ambient group of the ball."""


class NotNormalizing(ValueError):
    """Translation by an element not supported in [0,1/2)."""


class ResourceLimit(RuntimeError):
    """Vertex budget exceeded; carries the partial ball."""

    def __init__(self, message: str, partial: "CosetBall | None" = None):
        super().__init__(message)
        self.partial = partial


class IoFailure(OSError):
    """Cache file could not be read or written."""


class FormatVersionMismatch(ValueError):
    """Cache file is not a well-formed ball in a known format version."""


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


def _cells_of(g: CellMap) -> tuple[PatchKey, ...]:
    """The full map as law-annotated cells over [0,1), domain order."""
    out = []
    for d, r in g.pairs:
        e = d.n - r.n
        # offset = r.left - 2^e * d.left = (r.k - d.k) / 2^{r.n}
        cm, ce = r.k - d.k, r.n
        if cm == 0:
            ce = 0
        else:
            tz = (cm & -cm).bit_length() - 1
            cm >>= tz
            ce -= tz
        out.append((d.k, d.n, e, cm, ce))
    return tuple(out)


def _compose_keys(outer: tuple[PatchKey, ...], inner) -> list[PatchKey]:
    """Patches of (outer o inner).  outer's domains must cover every inner
    image; both lists are in domain order, and so is the result."""
    res = []
    n_outer = len(outer)
    for dk, dn, e, cm, ce in inner:
        jn = dn - e
        jk = dk + (cm << (jn - ce))
        # binary search for the outer cell containing jk / 2^jn
        lo, hi = 0, n_outer - 1
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            ak, an = outer[mid][0], outer[mid][1]
            q = an if an > jn else jn
            if (ak << (q - an)) <= (jk << (q - jn)):
                lo = mid
            else:
                hi = mid - 1
        ak, an, se, om, oe = outer[lo]
        if an <= jn:
            # one outer cell covers the image
            q = max(ce - se, oe)
            m2 = (cm << (q - ce + se)) + (om << (q - oe))
            if m2 == 0:
                m2, q = 0, 0
            else:
                tz = (m2 & -m2).bit_length() - 1
                m2 >>= tz
                q -= tz
            res.append((dk, dn, e + se, m2, q))
            continue
        i = lo
        while i < n_outer:
            ak, an, se, om, oe = outer[i]
            if an <= jn or (ak >> (an - jn)) != jk:
                break
            d = an - jn
            ddk = (dk << d) + (ak - (jk << d))
            q = max(ce - se, oe)
            m2 = (cm << (q - ce + se)) + (om << (q - oe))
            if m2 == 0:
                m2, q = 0, 0
            else:
                tz = (m2 & -m2).bit_length() - 1
                m2 >>= tz
                q -= tz
            res.append((ddk, dn + d, e + se, m2, q))
            i += 1
    return res


def _restriction_key(g: CellMap) -> StateKey:
    """The canonical patch key of g restricted to [0,1/2)."""
    if g.is_identity():
        return IDENTITY_KEY
    keys = []
    for d, r in g.pairs:
        if d.n >= 1 and (d.k >> (d.n - 1)) == 0:  # cell inside [0,1/2)
            e = d.n - r.n
            cm, ce = r.k - d.k, r.n
            if cm == 0:
                ce = 0
            else:
                tz = (cm & -cm).bit_length() - 1
                cm >>= tz
                ce -= tz
            keys.append((d.k, d.n, e, cm, ce))
    return tuple(merge_patch_keys(keys))


class CosetState:
    """A vertex of the coset graph: the restriction g|_[0,1/2) plus the
    ambient group tag."""

    __slots__ = ("key", "group")

    def __init__(self, key: StateKey, group: str):
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "group", group)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("CosetState is immutable")

    @property
    def patches(self) -> tuple[AffinePatch, ...]:
        return tuple(AffinePatch.from_key(k) for k in self.key)

    def image_intervals(self) -> tuple[StdInterval, ...]:
        return tuple(p.image for p in self.patches)

    def __eq__(self, other):
        return (
            isinstance(other, CosetState)
            and self.key == other.key
            and self.group == other.group
        )

    def __hash__(self):
        return hash((self.key, self.group))

    def __repr__(self):
        return f"CosetState({self.key!r}, {self.group!r})"

    def __str__(self):
        return "; ".join(str(p) for p in self.patches)

    def serialize(self) -> str:
        return "|".join(":".join(map(str, k)) for k in self.key)

    @classmethod
    def deserialize(cls, text: str, group: str) -> "CosetState":
        key = []
        for chunk in text.split("|"):
            parts = chunk.split(":")
            if len(parts) != 5:
                raise FormatVersionMismatch(f"bad patch {chunk!r}")
            key.append(tuple(int(p) for p in parts))
        state = cls(tuple(key), group)
        _validate_key(state.key, group)
        return state


def _validate_key(key: StateKey, group: str) -> None:
    """Structural soundness: patches partition [0,1/2), images are valid
    standard intervals in [0,1), total image length < 1; for F the patches
    are increasing and continuous starting at 0."""
    pos_k, pos_n = 0, 1
    total_num, total_den = 0, 0  # image length as total_num / 2^total_den
    images = []
    for dk, dn, e, cm, ce in key:
        q = max(pos_n, dn)
        if (pos_k << (q - pos_n)) != (dk << (q - dn)):
            raise FormatVersionMismatch("patch domains do not partition [0,1/2)")
        pos_k, pos_n = dk + 1, dn
        jn = dn - e
        if jn < 0 or (cm != 0 and ce > jn):
            raise FormatVersionMismatch("patch image is not standard")
        jk = dk + (cm << (jn - ce))
        if not 0 <= jk < (1 << jn):
            raise FormatVersionMismatch("patch image outside [0,1)")
        images.append((jk, jn))
        q = max(total_den, jn)
        total_num = (total_num << (q - total_den)) + (1 << (q - jn))
        total_den = q
    if pos_k != (1 << (pos_n - 1)):
        raise FormatVersionMismatch("patch domains do not cover [0,1/2)")
    if total_num >= (1 << total_den):
        raise FormatVersionMismatch("total image length is not < 1")
    seen = sorted((jk << (total_den - jn), jn) for jk, jn in images)
    for (a, an), (b, bn) in zip(seen, seen[1:]):
        if b < a + (1 << (total_den - an)):
            raise FormatVersionMismatch("patch images overlap")
    if group == "F":
        for (jk0, jn0), (jk1, jn1) in zip(images, images[1:]):
            q = max(jn0, jn1)
            if ((jk0 + 1) << (q - jn0)) != (jk1 << (q - jn1)):
                raise FormatVersionMismatch("F-state is not continuous increasing")
        if images and images[0][0] != 0:
            raise FormatVersionMismatch("F-state does not fix 0")


def state_of(g: CellMap, group: str = "V") -> CosetState:
    """The coset gH as a canonical state (left cosets throughout)."""
    if not class_le(g.group_class, group):
        raise ClassMismatch(f"{g.group_class}-element in a {group} coset graph")
    return CosetState(_restriction_key(g), group)


def step(state: CosetState, v: CellMap) -> CosetState:
    """The state of (v g) H given the state of gH: post-composition."""
    if not class_le(v.group_class, state.group):
        raise ClassMismatch(f"{v.group_class}-element acting on a {state.group} state")
    cells = _cells_of(v)
    return CosetState(tuple(merge_patch_keys(_compose_keys(cells, state.key))), state.group)


def translate(state: CosetState, n: CellMap) -> CosetState:
    """The covering translation gH -> (g n)H for n supported in [0,1/2).

    Such n normalize H and map [0,1/2) to itself; the action is
    pre-composition and commutes with every generator step.
    """
    if not n.is_identity_on(RIGHT_HALF):
        raise NotNormalizing("translation element must be the identity on [1/2,1)")
    if not class_le(n.group_class, state.group):
        raise ClassMismatch(f"{n.group_class}-element acting on a {state.group} state")
    inner = _restriction_key(n)
    return CosetState(tuple(merge_patch_keys(_compose_keys(state.key, inner))), state.group)


# ---------------------------------------------------------------------------
# generator sets
# ---------------------------------------------------------------------------


def default_generators(group: str) -> list[tuple[str, CellMap]]:
    """x0, x1 for F; + pi0 for T; + pi1 for V."""
    names = {"F": ["x0", "x1"], "T": ["x0", "x1", "pi0"], "V": ["x0", "x1", "pi0", "pi1"]}
    if group not in names:
        raise ValueError(f"unknown group {group!r}")
    return [(n, standard_generator(n)) for n in names[group]]


def subgroup_generators(group: str) -> list[tuple[str, CellMap]]:
    """Generators inside H = G_[0,1/2): elements fixing [0,1/2) pointwise."""
    x1 = standard_generator("x1")
    x2 = supported_copy(standard_generator("x1"), RIGHT_HALF)
    gens = [("x1", x1), ("x2", x2)]
    if group == "V":
        gens += [
            ("pi1", standard_generator("pi1")),
            ("rpi0", supported_copy(standard_generator("pi0"), RIGHT_HALF)),
        ]
    return gens


def normalizer_elements(group: str) -> list[tuple[str, CellMap]]:
    """Covering-translation witnesses: elements supported in [0,1/2)."""
    u0 = supported_copy(standard_generator("x0"), LEFT_HALF)
    u1 = supported_copy(standard_generator("x1"), LEFT_HALF)
    out = [("u0", u0), ("u1", u1)]
    if group == "V":
        out += [
            ("upi0", supported_copy(standard_generator("pi0"), LEFT_HALF)),
            ("upi1", supported_copy(standard_generator("pi1"), LEFT_HALF)),
        ]
    return out


def symmetrize(generators) -> list[tuple[str, CellMap]]:
    """Append inverses, dropping duplicates of involutions, keeping order."""
    out: list[tuple[str, CellMap]] = []
    seen: dict[CellMap, str] = {}
    for name, g in generators:
        for nm, h in ((name, g), (name + "^-1", g.inverse())):
            if h not in seen:
                seen[h] = nm
                out.append((nm, h))
    return out


# ---------------------------------------------------------------------------
# balls
# ---------------------------------------------------------------------------

CACHE_FORMAT = "thompson-cosetball 1"


@dataclass
class CosetBall:
    """A BFS ball of the coset graph, deterministic and closed: every edge
    out of a non-frontier vertex is recorded and lands inside the ball."""

    group: str
    radius: int
    gen_names: tuple[str, ...]
    gen_maps: tuple[CellMap, ...]
    states: tuple[StateKey, ...]
    depth: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]  # (source, generator index, target)
    index: dict = field(repr=False)
    _adj: list | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.states)

    def state(self, i: int) -> CosetState:
        return CosetState(self.states[i], self.group)

    def find(self, state: CosetState | StateKey) -> int | None:
        key = state.key if isinstance(state, CosetState) else state
        return self.index.get(key)

    @property
    def frontier(self) -> frozenset:
        return frozenset(i for i, d in enumerate(self.depth) if d == self.radius)

    def adjacency(self) -> list[tuple[int, ...]]:
        """Undirected adjacency (self-loops dropped), cached."""
        if self._adj is None:
            adj: list[set[int]] = [set() for _ in self.states]
            for i, _, j in self.edges:
                if i != j:
                    adj[i].add(j)
                    adj[j].add(i)
            self._adj = [tuple(sorted(s)) for s in adj]
        return self._adj

    def to_graph(self):
        from .ends import GraphBall

        return GraphBall(
            labels=self.states,
            adj=tuple(self.adjacency()),
            depth=self.depth,
            radius=self.radius,
            frontier=self.frontier,
        )

    def sub_ball(self, radius: int) -> "CosetBall":
        """The radius-r ball inside this one (exact, by determinism)."""
        if radius > self.radius:
            raise ValueError("cannot grow a ball by slicing")
        if radius == self.radius:
            return self
        keep = [i for i, d in enumerate(self.depth) if d <= radius]
        states = tuple(self.states[i] for i in keep)
        depth = tuple(self.depth[i] for i in keep)
        index = {k: i for i, k in enumerate(states)}
        old_to_new = {old: new for new, old in enumerate(keep)}
        edges = tuple(
            (old_to_new[i], gi, old_to_new[j])
            for i, gi, j in self.edges
            if self.depth[i] < radius and self.depth[j] <= radius
        )
        return CosetBall(self.group, radius, self.gen_names, self.gen_maps,
                         states, depth, edges, index)

    # -- persistence -----------------------------------------------------

    def save(self, path: str) -> None:
        try:
            with open(path, "w", encoding="ascii") as fh:
                fh.write(CACHE_FORMAT + "\n")
                fh.write(f"group {self.group}\n")
                fh.write(f"radius {self.radius}\n")
                fh.write(f"gens {len(self.gen_names)}\n")
                for name, g in zip(self.gen_names, self.gen_maps):
                    fh.write(f"G {name} {g.to_text()}\n")
                fh.write(f"vertices {len(self.states)}\n")
                fh.write(f"edges {len(self.edges)}\n")
                for i, key in enumerate(self.states):
                    ser = "|".join(":".join(map(str, p)) for p in key)
                    fh.write(f"V {i} {self.depth[i]} {ser}\n")
                for i, gi, j in self.edges:
                    fh.write(f"E {i} {gi} {j}\n")
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc

    @classmethod
    def load(cls, path: str) -> "CosetBall":
        try:
            with open(path, encoding="ascii") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        try:
            if lines[0] != CACHE_FORMAT:
                raise FormatVersionMismatch(f"unknown format {lines[0]!r}")
            pos = 1

            def take(prefix: str) -> str:
                nonlocal pos
                if not lines[pos].startswith(prefix + " "):
                    raise FormatVersionMismatch(f"expected {prefix!r} at line {pos + 1}")
                val = lines[pos][len(prefix) + 1 :]
                pos += 1
                return val

            group = take("group")
            if group not in ("F", "T", "V"):
                raise FormatVersionMismatch(f"unknown group {group!r}")
            radius = int(take("radius"))
            ngens = int(take("gens"))
            gen_names, gen_maps = [], []
            for _ in range(ngens):
                val = take("G")
                name, _, text = val.partition(" ")
                gen_names.append(name)
                gen_maps.append(CellMap.from_text(text))
            nv = int(take("vertices"))
            ne = int(take("edges"))
            states: list[StateKey] = []
            depth: list[int] = []
            for _ in range(nv):
                parts = lines[pos].split(" ")
                pos += 1
                if len(parts) != 4 or parts[0] != "V" or int(parts[1]) != len(states):
                    raise FormatVersionMismatch(f"bad vertex line {pos}")
                st = CosetState.deserialize(parts[3], group)
                depth.append(int(parts[2]))
                states.append(st.key)
            edges = []
            for _ in range(ne):
                parts = lines[pos].split(" ")
                pos += 1
                if len(parts) != 4 or parts[0] != "E":
                    raise FormatVersionMismatch(f"bad edge line {pos}")
                i, gi, j = int(parts[1]), int(parts[2]), int(parts[3])
                if not (0 <= i < nv and 0 <= j < nv and 0 <= gi < ngens):
                    raise FormatVersionMismatch(f"edge out of range at line {pos}")
                edges.append((i, gi, j))
            if pos != len(lines):
                raise FormatVersionMismatch("trailing data")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, FormatVersionMismatch):
                raise
            raise FormatVersionMismatch(f"malformed ball file: {exc}") from exc
        index = {k: i for i, k in enumerate(states)}
        if len(index) != len(states):
            raise FormatVersionMismatch("duplicate states")
        return cls(group, radius, tuple(gen_names), tuple(gen_maps),
                   tuple(states), tuple(depth), tuple(edges), index)

    def to_dot(self, color_predicate=None, label: str = "depth") -> str:
        """GraphViz export; vertices labeled by depth, colored by the
        predicate (defaults to membership in the affine part)."""
        if color_predicate is None:
            from .ends import is_affine_state

            color_predicate = lambda st: is_affine_state(st)  # noqa: E731
        out = ["graph cosetball {", "  node [shape=circle style=filled];"]
        for i in range(len(self.states)):
            color = "lightblue" if color_predicate(self.state(i)) else "lightsalmon"
            out.append(f'  v{i} [label="{self.depth[i]}" fillcolor="{color}"];')
        seen = set()
        for i, gi, j in self.edges:
            a, b = min(i, j), max(i, j)
            if (a, b) in seen or a == b:
                continue
            seen.add((a, b))
            out.append(f'  v{a} -- v{b} [label="{self.gen_names[gi]}"];')
        out.append("}")
        return "\n".join(out)


def _expand_chunk(chunk, prepared, keys):
    out = []
    for i in chunk:
        key = keys[i]
        row = []
        for cells in prepared:
            row.append(tuple(merge_patch_keys(_compose_keys(cells, key))))
        out.append((i, row))
    return out


def explore(
    group: str,
    radius: int,
    generators=None,
    *,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> CosetBall:
    """BFS ball of the coset graph from the identity coset.

    Deterministic: vertex numbering depends only on the generator list and
    the radius, never on worker count or scheduling.  Exceeding the vertex
    budget raises ResourceLimit carrying the last completed shell.
    """
    if generators is None:
        generators = default_generators(group)
    for _, g in generators:
        if not class_le(g.group_class, group):
            raise ClassMismatch(f"{g.group_class}-generator for group {group}")
    sym = symmetrize(generators)
    gen_names = tuple(name for name, _ in sym)
    gen_maps = tuple(g for _, g in sym)
    prepared = [_cells_of(g) for g in gen_maps]

    keys: list[StateKey] = [IDENTITY_KEY]
    index: dict[StateKey, int] = {IDENTITY_KEY: 0}
    depth: list[int] = [0]
    edges: list[tuple[int, int, int]] = []
    current = [0]

    def snapshot(r: int) -> CosetBall:
        return CosetBall(group, r, gen_names, gen_maps, tuple(keys), tuple(depth),
                         tuple(edges), dict(index))

    for d in range(1, radius + 1):
        if workers > 1 and len(current) >= workers * 4:
            chunks = [current[i::workers] for i in range(workers)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda c: _expand_chunk(c, prepared, keys), chunks))
            expanded = dict()
            for part in parts:
                for i, row in part:
                    expanded[i] = row
            items = [(i, expanded[i]) for i in current]
        else:
            items = _expand_chunk(current, prepared, keys)
        nxt = []
        for i, row in items:
            for gi, key2 in enumerate(row):
                j = index.get(key2)
                if j is None:
                    j = len(keys)
                    if j >= budget:
                        raise ResourceLimit(
                            f"vertex budget {budget} exceeded at depth {d} "
                            f"({len(keys)} states)",
                            partial=snapshot(d - 1),
                        )
                    index[key2] = j
                    keys.append(key2)
                    depth.append(d)
                    nxt.append(j)
                edges.append((i, gi, j))
        current = nxt
    return snapshot(radius)


def cache_path(cache_dir: str, group: str, radius: int) -> str:
    return os.path.join(cache_dir, f"{group}_r{radius}.ball")


def load_ball(path: str) -> CosetBall:
    return CosetBall.load(path)


def explore_cached(group: str, radius: int, cache_dir: str | None, **kw) -> CosetBall:
    """Explore through a per-radius file cache (one append-only shell file
    per radius; larger cached balls are sliced down)."""
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        for r in range(radius, radius + 6):
            path = cache_path(cache_dir, group, r)
            if os.path.exists(path):
                ball = CosetBall.load(path)
                if ball.radius >= radius:
                    return ball.sub_ball(radius)
    ball = explore(group, radius, **kw)
    if cache_dir:
        ball.save(cache_path(cache_dir, group, radius))
    return ball
