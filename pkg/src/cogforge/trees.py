"""Newick trees, quartet topologies, generalized quartet distance, and a
neighbor-joining baseline.

All metrics treat trees as unrooted. Quartet topology uses the four-point
condition on unit-branch path distances: with every edge counting 1, the
pairing with the strictly smallest distance sum is the quartet's split and
a tie means the quartet is a star.
"""

import re
from enum import Enum

import numpy as np

from . import kernels
from .errors import DataError, ParseError
from .matrix import MISSING


class TreeNode:
    __slots__ = ("label", "length", "children", "parent")

    def __init__(self, label=None, length=None):
        self.label = label
        self.length = length
        self.children = []
        self.parent = None

    def add(self, child):
        child.parent = self
        self.children.append(child)

    @property
    def is_leaf(self):
        return not self.children

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


class Tree:
    """Rooted representation of an (effectively unrooted) tree."""

    def __init__(self, root):
        self.root = root
        labels = []
        for node in root.walk():
            if node.length is not None and node.length < 0:
                raise DataError(f"negative branch length {node.length}")
            if node.is_leaf:
                if not node.label:
                    raise DataError("leaf without label")
                labels.append(node.label)
            elif len(node.children) < 2:
                raise DataError("internal node with a single child")
        dupes = {l for l in labels if labels.count(l) > 1}
        if dupes:
            raise DataError(f"duplicate leaf labels: {sorted(dupes)}")
        self._leaves = labels

    def leaves(self):
        return [n for n in self.root.walk() if n.is_leaf]

    def leaf_labels(self):
        return list(self._leaves)

    def __len__(self):
        return len(self._leaves)


# ---------------------------------------------------------------------------
# Newick

_NUMBER = re.compile(r"[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?")
_UNQUOTED_STOP = set("();,:")


def parse_newick(text):
    """Parse one `;`-terminated Newick string, polytomies and quotes allowed."""
    pos = 0
    n = len(text)

    def skip_ws():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def fail(msg, at=None):
        raise ParseError(msg, offset=pos if at is None else at)

    label_offsets = {}

    def read_label():
        nonlocal pos
        if pos < n and text[pos] == "'":
            start = pos
            pos += 1
            out = []
            while pos < n:
                if text[pos] == "'":
                    if pos + 1 < n and text[pos + 1] == "'":
                        out.append("'")
                        pos += 2
                        continue
                    pos += 1
                    return "".join(out), start
                out.append(text[pos])
                pos += 1
            fail("unterminated quoted label", at=start)
        start = pos
        while pos < n and not text[pos].isspace() \
                and text[pos] not in _UNQUOTED_STOP:
            pos += 1
        return text[start:pos], start

    def read_length():
        nonlocal pos
        skip_ws()
        if pos < n and text[pos] == ":":
            pos += 1
            skip_ws()
            m = _NUMBER.match(text, pos)
            if not m:
                fail("expected branch length after ':'")
            pos = m.end()
            return float(m.group(0))
        return None

    def read_subtree():
        nonlocal pos
        skip_ws()
        if pos >= n:
            fail("unexpected end of input")
        if text[pos] == "(":
            open_at = pos
            pos += 1
            node = TreeNode()
            while True:
                node.add(read_subtree())
                skip_ws()
                if pos >= n:
                    fail("unbalanced parentheses", at=open_at)
                if text[pos] == ",":
                    pos += 1
                    continue
                if text[pos] == ")":
                    pos += 1
                    break
                fail(f"expected ',' or ')', got {text[pos]!r}")
            skip_ws()
            label, _ = read_label()
            node.label = label or None
            node.length = read_length()
            return node
        label, start = read_label()
        if not label:
            fail("expected a node")
        if label in label_offsets:
            fail(f"duplicate leaf label {label!r}", at=start)
        label_offsets[label] = start
        node = TreeNode(label=label)
        node.length = read_length()
        return node

    root = read_subtree()
    skip_ws()
    if pos >= n or text[pos] != ";":
        fail("expected ';'")
    pos += 1
    skip_ws()
    if pos < n:
        fail("trailing characters after ';'")
    try:
        return Tree(root)
    except DataError as exc:
        raise ParseError(str(exc)) from None


def load_newick(path):
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    try:
        return parse_newick(text)
    except ParseError as exc:
        raise ParseError(str(exc).split(" (offset")[0], path=str(path)) from None


def _quote_label(label):
    if re.search(r"[\s();,:']", label):
        return "'" + label.replace("'", "''") + "'"
    return label


def write_newick(tree, *, lengths=True):
    def fmt(node):
        text = ""
        if node.children:
            text = "(" + ",".join(fmt(c) for c in node.children) + ")"
        if node.label:
            text += _quote_label(node.label)
        if lengths and node.length is not None:
            text += ":%g" % node.length
        return text

    return fmt(tree.root) + ";"


def save_newick(tree, path, *, lengths=True):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(write_newick(tree, lengths=lengths) + "\n")


# ---------------------------------------------------------------------------
# quartet topologies and the generalized quartet distance


class QuartetTopology(Enum):
    AB_CD = "AB|CD"
    AC_BD = "AC|BD"
    AD_BC = "AD|BC"
    STAR = "STAR"


def _adjacency(tree):
    adj = {}
    for node in tree.root.walk():
        for child in node.children:
            adj.setdefault(id(node), []).append(child)
            adj.setdefault(id(child), []).append(node)
    return adj


def topological_leaf_distances(tree, labels=None):
    """(labels, matrix) of unit-branch path distances between leaves."""
    leaves = tree.leaves()
    if labels is None:
        labels = sorted(n.label for n in leaves)
    by_label = {n.label: n for n in leaves}
    missing = set(labels) - set(by_label)
    if missing:
        raise DataError(f"labels not in tree: {sorted(missing)}")
    adj = _adjacency(tree)
    n = len(labels)
    dist = np.zeros((n, n), dtype=np.int64)
    index = {label: i for i, label in enumerate(labels)}
    for label in labels:
        start = by_label[label]
        seen = {id(start): 0}
        frontier = [start]
        while frontier:
            nxt = []
            for node in frontier:
                for other in adj.get(id(node), ()):
                    if id(other) not in seen:
                        seen[id(other)] = seen[id(node)] + 1
                        nxt.append(other)
            frontier = nxt
        row = index[label]
        for other_label in labels:
            dist[row, index[other_label]] = seen[id(by_label[other_label])]
    return list(labels), dist


def quartet_topology(tree, quartet):
    """Induced topology for four leaf labels, in the order given."""
    labels = sorted(quartet) if isinstance(quartet, (set, frozenset)) \
        else list(quartet)
    if len(labels) != 4 or len(set(labels)) != 4:
        raise DataError("need exactly 4 distinct leaf labels")
    _, dist = topological_leaf_distances(tree, labels)
    s1 = dist[0, 1] + dist[2, 3]
    s2 = dist[0, 2] + dist[1, 3]
    s3 = dist[0, 3] + dist[1, 2]
    if s1 < s2 and s1 < s3:
        return QuartetTopology.AB_CD
    if s2 < s1 and s2 < s3:
        return QuartetTopology.AC_BD
    if s3 < s1 and s3 < s2:
        return QuartetTopology.AD_BC
    return QuartetTopology.STAR


STAR_POLICIES = ("exclude", "contradict")


def gq_counts(inferred, gold):
    """(gold_resolved, differing, inferred_star) over all leaf quartets."""
    gold_set = set(gold.leaf_labels())
    inf_set = set(inferred.leaf_labels())
    if gold_set != inf_set:
        raise DataError(
            "leaf sets differ: %s" % sorted(gold_set ^ inf_set))
    labels = sorted(gold_set)
    _, d_gold = topological_leaf_distances(gold, labels)
    _, d_inf = topological_leaf_distances(inferred, labels)
    return kernels.quartet_counts(d_inf, d_gold)


def gq_distance(inferred, gold, *, star_policy="exclude"):
    """Fraction of gold-resolved quartets the inferred tree contradicts.

    star_policy picks what an inferred star on a gold-resolved quartet
    means: excluded from the numerator (default) or a contradiction.
    """
    if star_policy not in STAR_POLICIES:
        raise DataError(f"star policy must be one of {STAR_POLICIES}")
    resolved, differing, inferred_star = gq_counts(inferred, gold)
    if resolved == 0:
        raise DataError("gold tree fully unresolved")
    contradictions = differing
    if star_policy == "contradict":
        contradictions += inferred_star
    return contradictions / resolved


def restrict_to_leaves(tree, keep):
    """Induced subtree on the kept labels, degree-2 nodes suppressed."""
    keep = set(keep)
    missing = keep - set(tree.leaf_labels())
    if missing:
        raise DataError(f"labels not in tree: {sorted(missing)}")

    def prune(node):
        if node.is_leaf:
            if node.label not in keep:
                return None
            copy = TreeNode(label=node.label, length=node.length)
            return copy
        kids = [k for k in (prune(c) for c in node.children) if k is not None]
        if not kids:
            return None
        if len(kids) == 1:
            child = kids[0]
            if node.length is not None and child.length is not None:
                child.length = node.length + child.length
            elif child.length is None:
                child.length = node.length
            return child
        copy = TreeNode(label=node.label, length=node.length)
        for kid in kids:
            copy.add(kid)
        return copy

    root = prune(tree.root)
    if root is None:
        raise DataError("no leaves left after restriction")
    root.length = None
    return Tree(root)


# ---------------------------------------------------------------------------
# Hamming distances and neighbor joining


def hamming_matrix(matrix):
    """Pairwise mismatch fraction over sites where both taxa have data."""
    cells = matrix.cells
    n = len(matrix.taxa)
    if n < 2:
        raise DataError("need at least 2 taxa")
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            comparable = (cells[i] != MISSING) & (cells[j] != MISSING)
            total = int(comparable.sum())
            if total == 0:
                raise DataError(
                    "no comparable sites for pair "
                    f"({matrix.taxa[i]}, {matrix.taxa[j]})")
            mism = int(((cells[i] != cells[j]) & comparable).sum())
            out[i, j] = out[j, i] = mism / total
    return out


def nj_tree(dist, labels):
    """Neighbor joining; ties pick the smallest (i, j) position pair.

    Branch lengths are clamped at 0; the returned tree is rooted at the
    final three-way join but meant to be read unrooted.
    """
    D = np.array(dist, dtype=np.float64)
    labels = list(labels)
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] != len(labels):
        raise DataError("distance matrix and labels disagree")
    if not np.array_equal(D, D.T):
        raise DataError("distance matrix must be symmetric")
    if np.diag(D).any():
        raise DataError("distance matrix must have a zero diagonal")
    if len(labels) < 3:
        raise DataError("neighbor joining needs at least 3 taxa")

    nodes = [TreeNode(label=label) for label in labels]
    while len(nodes) > 3:
        n = len(nodes)
        rowsum = D.sum(axis=1)
        best = None
        for i in range(n):
            for j in range(i + 1, n):
                q = (n - 2) * D[i, j] - rowsum[i] - rowsum[j]
                if best is None or q < best[0]:
                    best = (q, i, j)
        _, i, j = best
        li = 0.5 * D[i, j] + (rowsum[i] - rowsum[j]) / (2 * (n - 2))
        lj = D[i, j] - li
        nodes[i].length = max(0.0, li)
        nodes[j].length = max(0.0, lj)
        joined = TreeNode()
        joined.add(nodes[i])
        joined.add(nodes[j])

        rest = [k for k in range(n) if k not in (i, j)]
        new_row = 0.5 * (D[i, rest] + D[j, rest] - D[i, j])
        D = D[np.ix_(rest, rest)]
        D = np.pad(D, ((0, 1), (0, 1)))
        D[-1, :-1] = new_row
        D[:-1, -1] = new_row
        nodes = [nodes[k] for k in rest] + [joined]

    root = TreeNode()
    for i, j, k in ((0, 1, 2), (1, 0, 2), (2, 0, 1)):
        nodes[i].length = max(
            0.0, 0.5 * (D[i, j] + D[i, k] - D[j, k]))
        root.add(nodes[i])
    return Tree(root)
