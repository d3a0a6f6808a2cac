"""Binary character matrices, coverage statistics, and sparsity grids.

Encoding: one column per (concept, cogid). A taxon scores 1 in the column
of its own cogid, 0 in the other columns of that concept, and ? (stored as
-1) across the whole concept group when it has no row for the concept.
"""

import re

import numpy as np

from .errors import DataError, ParseError

MISSING = -1

_SYMBOL = {0: "0", 1: "1", MISSING: "?"}
_VALUE = {"0": 0, "1": 1, "?": MISSING}


class CharacterMatrix:
    """taxa x columns cells in {0, 1, ?}; columns labeled (concept, cogid)."""

    def __init__(self, taxa, columns, cells, validate=True):
        self.taxa = tuple(taxa)
        self.columns = tuple((str(c), int(g)) for c, g in columns)
        self.cells = np.asarray(cells, dtype=np.int8).reshape(
            len(self.taxa), len(self.columns))
        if validate:
            self._check()

    def _check(self):
        bad = set(np.unique(self.cells)) - {0, 1, MISSING}
        if bad:
            raise DataError(f"matrix cells outside {{0,1,?}}: {sorted(bad)}")
        if len(set(self.taxa)) != len(self.taxa):
            raise DataError("duplicate taxon names")
        groups = {}
        for idx, (concept, _) in enumerate(self.columns):
            groups.setdefault(concept, []).append(idx)
        for idx in range(len(self.columns)):
            if (self.cells[:, idx] == MISSING).all():
                raise DataError(f"column {idx} is all-missing")
        for concept, idxs in groups.items():
            block = self.cells[:, idxs]
            for t, taxon in enumerate(self.taxa):
                row = block[t]
                has_missing = (row == MISSING).any()
                if has_missing and not (row == MISSING).all():
                    raise DataError(
                        f"{taxon}/{concept}: partial missingness in group")
                if not has_missing and (row == 1).sum() != 1:
                    raise DataError(
                        f"{taxon}/{concept}: want exactly one 1 in group")

    @property
    def shape(self):
        return self.cells.shape

    def __eq__(self, other):
        return (isinstance(other, CharacterMatrix)
                and self.taxa == other.taxa
                and self.columns == other.columns
                and np.array_equal(self.cells, other.cells))


def encode_binary(wordlist):
    """Wordlist with cogids -> CharacterMatrix (taxa = declared doculects)."""
    taxa = tuple(wordlist.doculects)
    t_index = {t: i for i, t in enumerate(taxa)}
    by_cell = {}
    for row in wordlist:
        if row.cogid is None:
            raise DataError(f"row {row.row_id}: missing cogid")
        key = (row.doculect, row.concept)
        if key in by_cell:
            raise DataError(f"polymorphic entry for {key}")
        by_cell[key] = row.cogid

    columns = []
    for concept in wordlist.concepts:
        cogids = sorted({cogid for (_, c), cogid in by_cell.items()
                         if c == concept})
        columns.extend((concept, cogid) for cogid in cogids)

    cells = np.full((len(taxa), len(columns)), MISSING, dtype=np.int8)
    for idx, (concept, cogid) in enumerate(columns):
        for taxon in taxa:
            have = by_cell.get((taxon, concept))
            if have is not None:
                cells[t_index[taxon], idx] = 1 if have == cogid else 0
    return CharacterMatrix(taxa, columns, cells)


def decode_partition(matrix):
    """Back to the (taxon, concept) -> cogid map wherever cells carry data."""
    out = {}
    for idx, (concept, cogid) in enumerate(matrix.columns):
        for t, taxon in enumerate(matrix.taxa):
            if matrix.cells[t, idx] == 1:
                out[(taxon, concept)] = cogid
    return out


def drop_constant_columns(matrix):
    """Remove columns whose non-? cells are all equal; report what went."""
    keep = []
    removed = []
    for idx, column in enumerate(matrix.columns):
        values = matrix.cells[:, idx]
        data = values[values != MISSING]
        if data.size and (data == data[0]).all():
            removed.append(column)
        else:
            keep.append(idx)
    pruned = CharacterMatrix(matrix.taxa,
                             [matrix.columns[i] for i in keep],
                             matrix.cells[:, keep])
    return pruned, removed


def amc(wordlist):
    """Mean shared-concept fraction over unordered doculect pairs.

    The denominator is the declared concept universe, so subsetting rows
    keeps the statistic comparable.
    """
    doculects = wordlist.doculects
    if len(doculects) < 2:
        raise DataError("mutual coverage needs at least 2 doculects")
    n_concepts = len(wordlist.concepts)
    if n_concepts == 0:
        raise DataError("mutual coverage needs at least 1 concept")
    cover = {d: wordlist.coverage(d) for d in doculects}
    total = 0.0
    n_pairs = 0
    for i in range(len(doculects)):
        for j in range(i + 1, len(doculects)):
            shared = cover[doculects[i]] & cover[doculects[j]]
            total += len(shared) / n_concepts
            n_pairs += 1
    return total / n_pairs


class DatasetStats:
    def __init__(self, n_languages, n_synsets, langs_per_synset,
                 synsets_per_lang, amc_value):
        self.n_languages = n_languages
        self.n_synsets = n_synsets
        self.langs_per_synset = langs_per_synset
        self.synsets_per_lang = synsets_per_lang
        self.amc = amc_value

    def as_row(self):
        return (self.n_languages, self.n_synsets, self.langs_per_synset,
                self.synsets_per_lang, self.amc)


def dataset_stats(wordlist):
    if not len(wordlist):
        raise DataError("empty wordlist has no stats")
    cover = {d: wordlist.coverage(d) for d in wordlist.doculects}
    per_concept = {c: 0 for c in wordlist.concepts}
    for d in wordlist.doculects:
        for c in cover[d]:
            per_concept[c] += 1
    n_lang = len(wordlist.doculects)
    n_syn = len(wordlist.concepts)
    return DatasetStats(
        n_languages=n_lang,
        n_synsets=n_syn,
        langs_per_synset=sum(per_concept.values()) / n_syn,
        synsets_per_lang=sum(len(s) for s in cover.values()) / n_lang,
        amc_value=amc(wordlist))


def write_stats_tsv(stats, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("n_languages\tn_synsets\tlangs_per_synset\t"
                     "synsets_per_lang\tamc\n")
        handle.write("%d\t%d\t%.4f\t%.4f\t%.4f\n" % stats.as_row())


# ---------------------------------------------------------------------------
# sparsity grid


def sparsity_grid(wordlist, language_order=None, concept_order=None):
    """Boolean presence grid: rows = languages, columns = concepts."""
    langs = tuple(language_order) if language_order is not None \
        else wordlist.doculects
    concepts = tuple(concept_order) if concept_order is not None \
        else wordlist.concepts
    unknown = set(langs) - set(wordlist.doculects)
    if unknown:
        raise DataError(f"unknown doculects in order: {sorted(unknown)}")
    unknown = set(concepts) - set(wordlist.concepts)
    if unknown:
        raise DataError(f"unknown concepts in order: {sorted(unknown)}")
    if set(langs) != set(wordlist.doculects) \
            or set(concepts) != set(wordlist.concepts):
        raise DataError("orders must cover all doculects and concepts")
    grid = np.zeros((len(langs), len(concepts)), dtype=bool)
    l_index = {d: i for i, d in enumerate(langs)}
    c_index = {c: i for i, c in enumerate(concepts)}
    for row in wordlist:
        grid[l_index[row.doculect], c_index[row.concept]] = True
    return grid, langs, concepts


def write_sparsity_tsv(grid, path):
    with open(path, "w", encoding="utf-8") as handle:
        for row in np.asarray(grid, dtype=int):
            handle.write("\t".join(str(v) for v in row) + "\n")


def write_sparsity_svg(grid, path, cell=4):
    grid = np.asarray(grid, dtype=bool)
    n_rows, n_cols = grid.shape if grid.ndim == 2 else (0, 0)
    width, height = n_cols * cell, n_rows * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for r in range(n_rows):
        for c in range(n_cols):
            if grid[r, c]:
                parts.append(f'<rect x="{c * cell}" y="{r * cell}" '
                             f'width="{cell}" height="{cell}" fill="black"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# matrix serialization


def _check_taxa_writable(matrix):
    for taxon in matrix.taxa:
        if re.search(r"\s", taxon) or not taxon:
            raise DataError(f"taxon name unusable in PHYLIP/NEXUS: {taxon!r}")


def _row_text(matrix, t):
    return "".join(_SYMBOL[int(v)] for v in matrix.cells[t])


def write_phylip(matrix, path):
    _check_taxa_writable(matrix)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{len(matrix.taxa)} {len(matrix.columns)}\n")
        for t, taxon in enumerate(matrix.taxa):
            handle.write(f"{taxon} {_row_text(matrix, t)}\n")


def read_phylip(path, columns=None):
    """Read back a relaxed PHYLIP file; columns restore (concept, cogid)."""
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise ParseError("bad PHYLIP header", path=str(path), line=1)
        ntaxa, ncols = int(header[0]), int(header[1])
        taxa = []
        rows = []
        for lineno, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 2 or len(fields[1]) != ncols:
                raise ParseError("bad PHYLIP row", path=str(path), line=lineno)
            taxa.append(fields[0])
            try:
                rows.append([_VALUE[ch] for ch in fields[1]])
            except KeyError as exc:
                raise ParseError(f"bad symbol {exc.args[0]!r}",
                                 path=str(path), line=lineno) from None
    if len(taxa) != ntaxa:
        raise ParseError(f"expected {ntaxa} taxa, got {len(taxa)}",
                         path=str(path))
    if columns is None:
        columns = [("col", i + 1) for i in range(ncols)]
    cells = np.array(rows, dtype=np.int8).reshape(ntaxa, ncols)
    return CharacterMatrix(taxa, columns, cells, validate=False)


def write_nexus(matrix, path):
    _check_taxa_writable(matrix)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("#NEXUS\n")
        handle.write("BEGIN DATA;\n")
        handle.write(f"  DIMENSIONS NTAX={len(matrix.taxa)} "
                     f"NCHAR={len(matrix.columns)};\n")
        handle.write('  FORMAT DATATYPE=STANDARD SYMBOLS="01" MISSING=?;\n')
        handle.write("  MATRIX\n")
        for t, taxon in enumerate(matrix.taxa):
            handle.write(f"    {taxon} {_row_text(matrix, t)}\n")
        handle.write("  ;\n")
        handle.write("END;\n")


def read_nexus(path, columns=None):
    """Read the DATA block emitted by write_nexus."""
    taxa = []
    rows = []
    in_matrix = False
    ncols = None
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            upper = line.upper()
            if upper.startswith("DIMENSIONS"):
                m = re.search(r"NCHAR=(\d+)", upper)
                if m:
                    ncols = int(m.group(1))
            elif upper == "MATRIX":
                in_matrix = True
            elif in_matrix:
                if line == ";":
                    in_matrix = False
                    continue
                fields = line.split()
                if len(fields) != 2:
                    raise ParseError("bad NEXUS matrix row", path=str(path),
                                     line=lineno)
                taxa.append(fields[0])
                try:
                    rows.append([_VALUE[ch] for ch in fields[1]])
                except KeyError as exc:
                    raise ParseError(f"bad symbol {exc.args[0]!r}",
                                     path=str(path), line=lineno) from None
    if ncols is None:
        raise ParseError("no DIMENSIONS line", path=str(path))
    if columns is None:
        columns = [("col", i + 1) for i in range(ncols)]
    cells = np.array(rows, dtype=np.int8).reshape(len(taxa), ncols)
    return CharacterMatrix(taxa, columns, cells, validate=False)


def write_columns_meta(matrix, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("index\tconcept\tcogid\n")
        for idx, (concept, cogid) in enumerate(matrix.columns):
            handle.write(f"{idx}\t{concept}\t{cogid}\n")


def read_columns_meta(path):
    columns = []
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        if header != "index\tconcept\tcogid":
            raise ParseError("bad columns-meta header", path=str(path), line=1)
        for lineno, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError("expected 3 fields", path=str(path),
                                 line=lineno)
            columns.append((fields[1], int(fields[2])))
    return columns
