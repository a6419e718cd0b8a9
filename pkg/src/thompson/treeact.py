"""A concrete testbed for the tree lemmas behind the fixed-point certificates.

The free product Z/2 * Z/3 (the modular group) acts on its Bass-Serre
tree: vertices are the cosets w<a> and w<b>, with an edge w<a> -- w<b>
for every group element w.  The tree is (2,3)-biregular, the action is
automatically without inversions, and it has both elliptic elements
(conjugates of a, b, b^2) and hyperbolic ones, so the dichotomy and the
fixed-set lemmas can all be exercised non-vacuously.  A free group would
make the elliptic clauses vacuous, hence this choice.

Words are kept in the alternating normal form over a (order 2) and
b, b^2 (order 3); letters: 'a', 'b', 'c' with c = b^2.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

__all__ = [
    "ModWord",
    "TreeBall",
    "OutOfBall",
    "normal_form",
    "word_mult",
    "word_inverse",
    "syllable_length",
    "build_tree_ball",
    "classify_isometry",
    "Elliptic",
    "Hyperbolic",
    "Unresolved",
    "tree_lemma_suite",
    "line_ball",
    "regular_tree_ball",
]


class OutOfBall(KeyError):
    """The action moved a vertex outside the explored ball."""


ModWord = str  # alternating normal form over 'a', 'b', 'c'

_INV = {"a": "a", "b": "c", "c": "b"}


def normal_form(word: str) -> ModWord:
    """Exhaustive rewriting with a^2 = 1, b^3 = 1; confluent by the stack
    construction (adjacent same-factor syllables always combine)."""
    stack: list[str] = []
    for ch in word:
        if ch not in "abc":
            raise ValueError(f"unknown letter {ch!r}")
        stack.append(ch)
        while len(stack) >= 2 and _same_factor(stack[-2], stack[-1]):
            y = stack.pop()
            x = stack.pop()
            z = _combine(x, y)
            if z:
                stack.append(z)
    return "".join(stack)


def _same_factor(x: str, y: str) -> bool:
    return (x == "a") == (y == "a")


def _combine(x: str, y: str) -> str:
    if x == "a":  # a * a = 1
        return ""
    exp = ("bc".index(x) + 1 + "bc".index(y) + 1) % 3
    return "" if exp == 0 else "bc"[exp - 1]


def word_mult(u: ModWord, v: ModWord) -> ModWord:
    return normal_form(u + v)


def word_inverse(u: ModWord) -> ModWord:
    return "".join(_INV[ch] for ch in reversed(u))


def syllable_length(u: ModWord) -> int:
    return len(u)


def all_words(max_syllables: int) -> list[ModWord]:
    """All normal forms of syllable length <= max_syllables."""
    out = [""]
    frontier = [""]
    for _ in range(max_syllables):
        nxt = []
        for w in frontier:
            if not w:
                letters = ("a", "b", "c")
            elif w[-1] == "a":
                letters = ("b", "c")
            else:
                letters = ("a",)
            for ch in letters:
                nxt.append(w + ch)
        out.extend(nxt)
        frontier = nxt
    return out


Vertex = tuple[ModWord, str]  # (coset representative, 'A' | 'B')


def _canon(word: ModWord, side: str) -> Vertex:
    if side == "A":
        if word.endswith("a"):
            word = word[:-1]
    else:
        if word and word[-1] in "bc":
            word = word[:-1]
    return (word, side)


@dataclass
class TreeBall:
    """All vertices w<A>, w<B> for words of syllable length <= L."""

    L: int
    vertices: tuple[Vertex, ...]
    index: dict
    adj: tuple[tuple[int, ...], ...]
    depth: tuple[int, ...]
    parent: tuple[int, ...]

    def __len__(self):
        return len(self.vertices)

    def find(self, v: Vertex) -> int | None:
        return self.index.get(v)

    @property
    def frontier(self) -> frozenset:
        """Vertices whose true degree (2 for A-cosets, 3 for B-cosets) is
        not fully present in the ball."""
        out = set()
        for i, (w, side) in enumerate(self.vertices):
            want = 2 if side == "A" else 3
            if len(self.adj[i]) < want:
                out.add(i)
        return frozenset(out)

    def act(self, w: ModWord, i: int) -> int:
        """Left multiplication on cosets; OutOfBall if the image escaped."""
        word, side = self.vertices[i]
        img = _canon(word_mult(w, word), side)
        j = self.index.get(img)
        if j is None:
            raise OutOfBall(img)
        return j

    def fixed_set(self, w: ModWord) -> frozenset:
        """Exact within the ball: vertices moved out of the ball are moved,
        hence not fixed."""
        out = set()
        for i in range(len(self.vertices)):
            try:
                if self.act(w, i) == i:
                    out.add(i)
            except OutOfBall:
                pass
        return frozenset(out)

    def distance(self, i: int, j: int) -> int:
        """Graph distance via the lowest common ancestor; exact because
        geodesics between ball vertices stay in the ball (convexity)."""
        d = 0
        while i != j:
            if self.depth[i] >= self.depth[j]:
                i = self.parent[i]
            else:
                j = self.parent[j]
            d += 1
        return d

    def to_graph(self):
        from .ends import GraphBall

        return GraphBall(
            labels=self.vertices,
            adj=self.adj,
            depth=self.depth,
            radius=max(self.depth),
            frontier=self.frontier,
        )

    def to_dot(self, highlight=frozenset()) -> str:
        out = ["graph treeball {", "  node [shape=circle];"]
        for i, (w, side) in enumerate(self.vertices):
            shape = "circle" if side == "A" else "square"
            fill = ' style=filled fillcolor="gold"' if i in highlight else ""
            out.append(f'  v{i} [label="{w or "e"}{side}" shape={shape}{fill}];')
        for i in range(len(self.vertices)):
            for j in self.adj[i]:
                if i < j:
                    out.append(f"  v{i} -- v{j};")
        out.append("}")
        return "\n".join(out)


def build_tree_ball(L: int) -> TreeBall:
    words = all_words(L)
    verts: list[Vertex] = []
    index: dict[Vertex, int] = {}
    for w in words:
        for side in ("A", "B"):
            v = _canon(w, side)
            if v not in index:
                index[v] = len(verts)
                verts.append(v)
    adj: list[set[int]] = [set() for _ in verts]
    for w in words:
        i = index[_canon(w, "A")]
        j = index[_canon(w, "B")]
        adj[i].add(j)
        adj[j].add(i)
    # sanity: a tree has exactly one more vertex than edge
    nedges = sum(len(s) for s in adj) // 2
    assert nedges == len(verts) - 1, "coset graph is not a tree"
    root = index[("", "A")]
    depth = [-1] * len(verts)
    parent = [-1] * len(verts)
    depth[root] = 0
    parent[root] = root
    q = deque([root])
    while q:
        v = q.popleft()
        for u in adj[v]:
            if depth[u] < 0:
                depth[u] = depth[v] + 1
                parent[u] = v
                q.append(u)
    return TreeBall(
        L=L,
        vertices=tuple(verts),
        index=index,
        adj=tuple(tuple(sorted(s)) for s in adj),
        depth=tuple(depth),
        parent=tuple(parent),
    )


# ---------------------------------------------------------------------------
# isometry classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Elliptic:
    fixed_vertex: Vertex


@dataclass(frozen=True)
class Hyperbolic:
    translation_length: int
    axis_segment: tuple[Vertex, ...]


@dataclass(frozen=True)
class Unresolved:
    reason: str


def classify_isometry(w: ModWord, ball: TreeBall):
    """Elliptic with a fixed vertex, or hyperbolic with its translation
    length and a displayed axis segment.  Resolution needs the ball radius
    to dominate the word length (2 * syllables + 2); below that the answer
    is Unresolved rather than a guess."""
    w = normal_form(w)
    if ball.L < 2 * syllable_length(w) + 2:
        return Unresolved(f"ball L={ball.L} too small for |w|={syllable_length(w)}")
    best = None
    displacement = {}
    for i in range(len(ball.vertices)):
        try:
            j = ball.act(w, i)
        except OutOfBall:
            continue
        d = ball.distance(i, j)
        displacement[i] = d
        if best is None or d < best:
            best = d
    if best == 0:
        fixed = min(i for i, d in displacement.items() if d == 0)
        return Elliptic(ball.vertices[fixed])
    # min displacement = translation length; its locus is the axis
    axis = sorted(i for i, d in displacement.items() if d == best)
    ordered = _order_path(ball, axis)
    return Hyperbolic(best, tuple(ball.vertices[i] for i in ordered))


def _order_path(ball: TreeBall, vertices: list[int]) -> list[int]:
    """Order a set of vertices that induce a path in the tree."""
    vs = set(vertices)
    deg = {v: sum(1 for u in ball.adj[v] if u in vs) for v in vs}
    ends = [v for v in vertices if deg[v] <= 1]
    start = min(ends) if ends else min(vertices)
    out = [start]
    seen = {start}
    while True:
        nxt = [u for u in ball.adj[out[-1]] if u in vs and u not in seen]
        if not nxt:
            break
        out.append(nxt[0])
        seen.add(nxt[0])
    return out


# ---------------------------------------------------------------------------
# the lemma suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuiteReport:
    elements: int
    elliptic: int
    hyperbolic: int
    pairs_disjoint_fix_checked: int
    pairs_stabilized_fix_checked: int
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def tree_lemma_suite(ball: TreeBall, max_syllables: int) -> SuiteReport:
    """Exhaustive check of the tree-action facts the certificates rely on:
    every element is elliptic xor hyperbolic; nonempty fixed sets are
    subtrees; disjoint nonempty fixed sets force a hyperbolic product;
    an elliptic stabilizing another's fixed set shares a fixed point.

    Products of two words double the syllable length, so the ball must
    satisfy L >= 4 * max_syllables + 2 for every classification to resolve.
    """
    if ball.L < 4 * max_syllables + 2:
        raise ValueError("ball too small for the requested syllable bound")
    words = [w for w in all_words(max_syllables)]
    violations = []
    info = {}
    inner = {i for i in range(len(ball.vertices))
             if ball.depth[i] <= ball.L - max_syllables - 1}
    for w in words:
        cls = classify_isometry(w, ball)
        fix = ball.fixed_set(w)
        if isinstance(cls, Elliptic):
            if not fix:
                violations.append(f"{w or 'e'}: elliptic but no fixed vertex")
        elif isinstance(cls, Hyperbolic):
            if fix:
                violations.append(f"{w or 'e'}: hyperbolic with fixed vertices")
        else:
            violations.append(f"{w or 'e'}: unresolved")
            continue
        if fix and not _connected(ball, fix):
            violations.append(f"{w or 'e'}: fixed set is not a subtree")
        info[w] = (cls, fix)

    disjoint_checked = 0
    stabilized_checked = 0
    for w1, w2 in itertools.product(words, repeat=2):
        (c1, f1) = info[w1]
        (c2, f2) = info[w2]
        if not (isinstance(c1, Elliptic) and isinstance(c2, Elliptic)):
            continue
        if f1 and f2 and not (f1 & f2):
            disjoint_checked += 1
            prod = classify_isometry(word_mult(w1, w2), ball)
            if not isinstance(prod, Hyperbolic):
                violations.append(
                    f"({w1},{w2}): disjoint fixed sets but product not hyperbolic"
                )
        # setwise stabilization, verified on the safely-inner part
        f2_inner = f2 & inner
        if f2_inner and f2_inner == f2:
            try:
                image = {ball.act(w1, v) for v in f2}
            except OutOfBall:
                image = None
            if image is not None and image == f2:
                stabilized_checked += 1
                if not (f1 & f2):
                    violations.append(
                        f"({w1},{w2}): stabilized fixed set but empty intersection"
                    )
    ell = sum(1 for c, _ in info.values() if isinstance(c, Elliptic))
    hyp = sum(1 for c, _ in info.values() if isinstance(c, Hyperbolic))
    return SuiteReport(
        elements=len(words),
        elliptic=ell,
        hyperbolic=hyp,
        pairs_disjoint_fix_checked=disjoint_checked,
        pairs_stabilized_fix_checked=stabilized_checked,
        violations=tuple(violations),
    )


def _connected(ball: TreeBall, vertices: frozenset) -> bool:
    start = next(iter(vertices))
    seen = {start}
    q = deque([start])
    while q:
        v = q.popleft()
        for u in ball.adj[v]:
            if u in vertices and u not in seen:
                seen.add(u)
                q.append(u)
    return len(seen) == len(vertices)


# ---------------------------------------------------------------------------
# plain testbed graphs for the ends machinery
# ---------------------------------------------------------------------------


def line_ball(radius: int):
    """The path -radius..radius: the two-ended testbed."""
    from .ends import GraphBall

    n = 2 * radius + 1
    labels = tuple(range(-radius, radius + 1))
    adj = tuple(
        tuple(x for x in (i - 1, i + 1) if 0 <= x < n) for i in range(n)
    )
    depth = tuple(abs(lab) for lab in labels)
    frontier = frozenset((0, n - 1))
    return GraphBall(labels, adj, depth, radius, frontier)


def regular_tree_ball(degree: int, radius: int):
    """Ball of the degree-regular tree; labels are root paths."""
    from .ends import GraphBall

    labels = [()]
    adj: list[list[int]] = [[]]
    depth = [0]
    current = [0]
    for d in range(1, radius + 1):
        nxt = []
        for v in current:
            fanout = degree if d == 1 else degree - 1
            for c in range(fanout):
                i = len(labels)
                labels.append(labels[v] + (c,))
                adj.append([v])
                adj[v].append(i)
                depth.append(d)
                nxt.append(i)
        current = nxt
    return GraphBall(
        tuple(labels),
        tuple(tuple(a) for a in adj),
        tuple(depth),
        radius,
        frozenset(current),
    )
