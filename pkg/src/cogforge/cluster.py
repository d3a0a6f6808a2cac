"""Sound-class alignment, distances, and per-concept cognate clustering.

Distances come from global affine-gap alignment of sound-class sequences,
normalized as d = 1 - 2*S(a,b) / (S(a,a) + S(b,b)) and clamped to [0,1].
Clustering is flat average-linkage agglomeration cut at a threshold. The
optional LexStat-style scorer replaces the plain substitution table with
per-language-pair log-odds of attested versus permutation-expected
class-pair frequencies.
"""

import csv
import hashlib
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import DataError, ParseError
from .ipa import default_sound_classes, to_sound_classes

GAP = "-"

_OPEN_KEY = "GAP_OPEN"
_EXTEND_KEY = "GAP_EXTEND"


class ScoringScheme:
    """Symmetric substitution table over class labels plus affine gap costs."""

    def __init__(self, classes, table, gap_open, gap_extend, validate=True):
        self.classes = tuple(classes)
        self.index = {c: i for i, c in enumerate(self.classes)}
        if len(self.index) != len(self.classes):
            raise DataError("duplicate class labels in scheme")
        self.table = np.asarray(table, dtype=np.float64)
        self.gap_open = float(gap_open)
        self.gap_extend = float(gap_extend)
        k = len(self.classes)
        if self.table.shape != (k, k):
            raise DataError(f"scheme table must be {k}x{k}")
        if validate:
            if not np.array_equal(self.table, self.table.T):
                raise DataError("scheme table must be symmetric")
            diag = np.diag(self.table)
            off = self.table[~np.eye(k, dtype=bool)]
            if k > 1 and diag.min() <= off.max():
                raise DataError("identical-class score must beat any mismatch")
            if diag.min() <= 0:
                raise DataError("identical-class scores must be positive")
            if self.gap_open >= 0 or self.gap_extend >= 0:
                raise DataError("gap costs must be negative")

    def encode(self, seq):
        try:
            return np.array([self.index[c] for c in seq], dtype=np.int32)
        except KeyError as exc:
            raise DataError(f"class label {exc.args[0]!r} not in scheme") from None

    def self_score(self, enc):
        return float(self.table[enc, enc].sum())


def unit_scheme(classes, match=1.0, mismatch=-1.0, gap_open=-1.0,
                gap_extend=-0.5):
    k = len(classes)
    table = np.full((k, k), float(mismatch))
    np.fill_diagonal(table, float(match))
    return ScoringScheme(classes, table, gap_open, gap_extend)


def default_scheme():
    """Unit scheme over the bundled sound classes plus the lenient label."""
    classes = default_sound_classes().classes + ["?"]
    return unit_scheme(classes)


def load_scheme(path):
    """Long-format CSV `a,b,score` with reserved GAP_OPEN/GAP_EXTEND rows."""
    pairs = {}
    gaps = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["a", "b", "score"]:
            raise ParseError("expected header a,b,score", path=str(path))
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError("expected 3 fields", path=str(path), line=lineno)
            a, b, text = row
            try:
                value = float(text)
            except ValueError:
                raise ParseError(f"bad score {text!r}", path=str(path),
                                 line=lineno) from None
            if a in (_OPEN_KEY, _EXTEND_KEY):
                gaps[a] = value
                continue
            key = (min(a, b), max(a, b))
            if key in pairs and pairs[key] != value:
                raise ParseError(f"conflicting scores for pair {key}",
                                 path=str(path), line=lineno)
            pairs[key] = value
    if _OPEN_KEY not in gaps or _EXTEND_KEY not in gaps:
        raise ParseError(f"missing {_OPEN_KEY}/{_EXTEND_KEY} rows", path=str(path))
    classes = sorted({c for key in pairs for c in key})
    k = len(classes)
    idx = {c: i for i, c in enumerate(classes)}
    table = np.zeros((k, k))
    missing = []
    for i, a in enumerate(classes):
        for b in classes[i:]:
            key = (a, b)
            if key not in pairs:
                missing.append(key)
            else:
                table[idx[a], idx[b]] = table[idx[b], idx[a]] = pairs[key]
    if missing:
        raise ParseError(f"scheme misses {len(missing)} pairs, e.g. {missing[:3]}",
                         path=str(path))
    return ScoringScheme(classes, table, gaps[_OPEN_KEY], gaps[_EXTEND_KEY])


def align(a, b, scheme):
    """Optimal global alignment of two class sequences.

    Returns (alignment, score); the alignment is a list of label pairs with
    '-' for gaps. Traceback ties prefer match, then gap in a, then gap in b.
    """
    if not len(a) or not len(b):
        raise DataError("cannot align an empty sequence")
    enc_a = scheme.encode(a)
    enc_b = scheme.encode(b)
    score, path = kernels.align_affine(enc_a, enc_b, scheme.table,
                                       scheme.gap_open, scheme.gap_extend)
    alignment = [(a[i] if i >= 0 else GAP, b[j] if j >= 0 else GAP)
                 for i, j in path]
    return alignment, float(score)


def _normalized_distance(enc_a, enc_b, table, gap_open, gap_extend):
    if len(enc_a) == len(enc_b) and (enc_a == enc_b).all():
        return 0.0
    score, _ = kernels.align_affine(enc_a, enc_b, table, gap_open, gap_extend)
    denom = float(table[enc_a, enc_a].sum() + table[enc_b, enc_b].sum())
    if denom <= 0:
        return 1.0
    return min(1.0, max(0.0, 1.0 - 2.0 * score / denom))


def sca_distance(a, b, scheme):
    """Normalized alignment distance in [0,1]; 0 iff identical up to score."""
    if not len(a) or not len(b):
        raise DataError("cannot align an empty sequence")
    return _normalized_distance(scheme.encode(a), scheme.encode(b),
                                scheme.table, scheme.gap_open,
                                scheme.gap_extend)


@dataclass(frozen=True)
class ClusterParams:
    method: str = "sca"
    threshold: float = None
    linkage: str = "average"
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("sca", "lexstat"):
            raise DataError(f"unknown method {self.method!r}")
        if self.linkage != "average":
            raise DataError("only average linkage is supported")
        if self.threshold is None:
            object.__setattr__(self, "threshold",
                               0.45 if self.method == "sca" else 0.60)
        if not 0 < self.threshold <= 1:
            raise DataError(f"threshold must be in (0, 1], got {self.threshold}")


class LexStatScorer:
    """Per-language-pair log-odds substitution tables.

    score(x, y) = log2((attested + 0.5) / (expected + 0.5)) where attested
    counts aligned class pairs across same-concept words of the two
    languages and expected averages the same count over `runs` shuffles of
    each language's concept assignment. Pairs with fewer than two shared
    concepts fall back to the plain scheme and are flagged.
    """

    def __init__(self, scheme, tables, fallback_pairs, runs, seed):
        self.scheme = scheme
        self.tables = tables
        self.fallback_pairs = frozenset(fallback_pairs)
        self.runs = runs
        self.seed = seed

    def table_for(self, lang_a, lang_b):
        """Pair table, or None when the pair uses the plain scheme."""
        return self.tables.get((lang_a, lang_b))

    def distance(self, classes_a, classes_b, lang_a, lang_b):
        scheme = self.scheme
        table = self.table_for(lang_a, lang_b)
        if table is None:
            return sca_distance(classes_a, classes_b, scheme)
        if not len(classes_a) or not len(classes_b):
            raise DataError("cannot align an empty sequence")
        return _normalized_distance(scheme.encode(classes_a),
                                    scheme.encode(classes_b), table,
                                    scheme.gap_open, scheme.gap_extend)


def _pair_rng(seed, lang_a, lang_b):
    digest = hashlib.sha256(f"{seed}:{lang_a}:{lang_b}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def _class_rows(wordlist, table):
    rows = {}
    for row in wordlist:
        if row.tokens is None:
            continue
        classes = to_sound_classes(row.tokens, table, strict=False)
        if classes:
            rows.setdefault(row.doculect, []).append((row.concept, classes))
    return rows


def build_lexstat_scorer(wordlist, runs=1000, seed=0, *, scheme=None,
                         table=None):
    if runs < 1:
        raise DataError(f"runs must be >= 1, got {runs}")
    if scheme is None:
        scheme = default_scheme()
    if table is None:
        table = default_sound_classes()
    by_lang = _class_rows(wordlist, table)
    langs = sorted(by_lang)
    if len(langs) < 2:
        raise DataError("LexStat scorer needs at least 2 doculects")

    tables = {}
    fallback = set()
    for ai in range(len(langs)):
        for bi in range(ai + 1, len(langs)):
            la, lb = langs[ai], langs[bi]
            shared = ({c for c, _ in by_lang[la]}
                      & {c for c, _ in by_lang[lb]})
            if len(shared) < 2:
                fallback.add((la, lb))
                fallback.add((lb, la))
                continue
            attested = _pair_counts(by_lang[la], by_lang[lb], scheme)
            expected = _expected_counts(by_lang[la], by_lang[lb], scheme,
                                        runs, _pair_rng(seed, la, lb))
            scores = np.log2((attested + 0.5) / (expected + 0.5))
            tables[(la, lb)] = scores
            tables[(lb, la)] = scores.T
    return LexStatScorer(scheme=scheme, tables=tables, fallback_pairs=fallback,
                         runs=runs, seed=seed)


def _pair_counts(rows_a, rows_b, scheme):
    k = len(scheme.classes)
    counts = np.zeros((k, k))
    by_concept = {}
    for concept, classes in rows_b:
        by_concept.setdefault(concept, []).append(classes)
    for concept, classes_a in rows_a:
        for classes_b in by_concept.get(concept, ()):
            alignment, _ = align(classes_a, classes_b, scheme)
            for x, y in alignment:
                if x != GAP and y != GAP:
                    counts[scheme.index[x], scheme.index[y]] += 1
    return counts


def _expected_counts(rows_a, rows_b, scheme, runs, rng):
    concepts_a = [c for c, _ in rows_a]
    concepts_b = [c for c, _ in rows_b]
    total = np.zeros((len(scheme.classes), len(scheme.classes)))
    for _ in range(runs):
        perm_a = [(concepts_a[i], rows_a[j][1])
                  for j, i in enumerate(rng.permutation(len(rows_a)))]
        perm_b = [(concepts_b[i], rows_b[j][1])
                  for j, i in enumerate(rng.permutation(len(rows_b)))]
        total += _pair_counts(perm_a, perm_b, scheme)
    return total / runs


def flat_upgma(dist, threshold):
    """Average-linkage agglomeration cut at the threshold.

    dist: square symmetric matrix. Returns per-item cluster labels numbered
    by smallest member index. Merges while the minimum average distance is
    <= threshold, ties broken by smallest cluster positions.
    """
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    clusters = [[i] for i in range(n)]
    while len(clusters) > 1:
        best = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                pairs = [(a, b) for a in clusters[i] for b in clusters[j]]
                avg = sum(dist[a, b] for a, b in pairs) / len(pairs)
                if best is None or avg < best[0]:
                    best = (avg, i, j)
        if best[0] > threshold:
            break
        _, i, j = best
        clusters[i] = sorted(clusters[i] + clusters[j])
        del clusters[j]
    labels = [0] * n
    for num, members in enumerate(sorted(clusters, key=min), start=1):
        for item in members:
            labels[item] = num
    return labels


def cluster_concept(rows, params, scorer=None, *, scheme=None, table=None):
    """Cluster the rows of one concept; returns {row_id: local cogid}.

    Rows of the same doculect, and every pair when method is sca, are
    compared with the plain scheme; lexstat uses the scorer's pair tables.
    """
    if not rows:
        return {}
    concepts = {row.concept for row in rows}
    if len(concepts) > 1:
        raise DataError(f"rows span several concepts: {sorted(concepts)}")
    if scheme is None:
        scheme = scorer.scheme if scorer is not None else default_scheme()
    if table is None:
        table = default_sound_classes()
    classes = [to_sound_classes(row.tokens, table, strict=False)
               for row in rows]
    n = len(rows)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if params.method == "lexstat" and scorer is not None:
                d = scorer.distance(classes[i], classes[j],
                                    rows[i].doculect, rows[j].doculect)
            else:
                d = sca_distance(classes[i], classes[j], scheme)
            dist[i, j] = dist[j, i] = d
    labels = flat_upgma(dist, params.threshold)
    return {row.row_id: label for row, label in zip(rows, labels)}


def assign_cognates(wordlist, params, *, scorer=None, scheme=None,
                    table=None, runs=1000):
    """Cluster every concept independently; cogids are globally unique."""
    missing = [row.row_id for row in wordlist if row.tokens is None]
    if missing:
        raise DataError(f"rows missing tokens: {missing}")
    if params.method == "lexstat" and scorer is None and len(wordlist):
        scorer = build_lexstat_scorer(wordlist, runs=runs, seed=params.seed,
                                      scheme=scheme, table=table)
    new_rows = []
    base = 0
    by_concept = wordlist.rows_by_concept()
    for concept in wordlist.concepts:
        rows = by_concept[concept]
        if not rows:
            continue
        local = cluster_concept(rows, params, scorer, scheme=scheme,
                                table=table)
        for row in rows:
            new_rows.append(replace(row, cogid=base + local[row.row_id]))
        base += max(local.values())
    order = {row.row_id: i for i, row in enumerate(wordlist)}
    new_rows.sort(key=lambda r: order[r.row_id])
    return wordlist.with_rows(new_rows)
