import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogforge.corpus import WordRow, Wordlist
from cogforge.errors import DataError
from cogforge.matrix import (MISSING, CharacterMatrix, amc, dataset_stats,
                             decode_partition, drop_constant_columns,
                             encode_binary, read_columns_meta, read_nexus,
                             read_phylip, sparsity_grid, write_columns_meta,
                             write_nexus, write_phylip, write_sparsity_svg,
                             write_sparsity_tsv, write_stats_tsv)


def row(rid, doc, concept, cogid=None):
    return WordRow(row_id=rid, doculect=doc, concept=concept, form="w",
                   cogid=cogid)


def coverage_wordlist(coverage, concepts):
    """Languages with given concept coverage; every language its own cogid."""
    rows = []
    rid = 1
    for doc, covered in coverage.items():
        for concept in covered:
            rows.append(row(rid, doc, concept, cogid=rid))
            rid += 1
    return Wordlist(rows, doculects=sorted(coverage), concepts=concepts)


class TestEncode:
    def test_hand_example(self):
        rows = [row(1, "L1", "hand", 1), row(2, "L2", "hand", 1),
                row(3, "L3", "hand", 2), row(4, "L4", "foot", 9)]
        matrix = encode_binary(Wordlist(rows))
        hand_cols = [i for i, (c, _) in enumerate(matrix.columns)
                     if c == "hand"]
        assert [matrix.columns[i][1] for i in hand_cols] == [1, 2]
        t = {taxon: i for i, taxon in enumerate(matrix.taxa)}
        first, second = hand_cols
        assert list(matrix.cells[:, first][[t["L1"], t["L2"], t["L3"],
                                            t["L4"]]]) == [1, 1, 0, MISSING]
        assert list(matrix.cells[:, second][[t["L1"], t["L2"], t["L3"],
                                             t["L4"]]]) == [0, 0, 1, MISSING]

    def test_single_row(self):
        matrix = encode_binary(Wordlist([row(1, "L1", "hand", 3)]))
        assert matrix.shape == (1, 1)
        assert matrix.cells[0, 0] == 1

    def test_empty_wordlist(self):
        matrix = encode_binary(Wordlist([]))
        assert matrix.shape == (0, 0)

    def test_missing_cogid_rejected(self):
        with pytest.raises(DataError):
            encode_binary(Wordlist([row(1, "L1", "hand")]))

    def test_polymorphic_rows_rejected(self):
        rows = [row(1, "L1", "hand", 1), row(2, "L1", "hand", 2)]
        with pytest.raises(DataError) as err:
            encode_binary(Wordlist(rows, synonyms=True))
        assert "polymorphic" in str(err.value)

    def test_column_order_concepts_then_cogid(self):
        rows = [row(1, "L1", "hand", 5), row(2, "L2", "hand", 2),
                row(3, "L1", "foot", 7)]
        matrix = encode_binary(Wordlist(rows))
        assert matrix.columns == (("hand", 2), ("hand", 5), ("foot", 7))

    def test_partition_round_trip(self):
        rows = [row(1, "L1", "hand", 1), row(2, "L2", "hand", 1),
                row(3, "L3", "hand", 2), row(4, "L1", "foot", 4),
                row(5, "L3", "foot", 4)]
        matrix = encode_binary(Wordlist(rows))
        assert decode_partition(matrix) == {
            ("L1", "hand"): 1, ("L2", "hand"): 1, ("L3", "hand"): 2,
            ("L1", "foot"): 4, ("L3", "foot"): 4,
        }


@st.composite
def random_cognate_wordlists(draw):
    n_lang = draw(st.integers(min_value=2, max_value=6))
    n_concepts = draw(st.integers(min_value=1, max_value=6))
    rows = []
    rid = 1
    for c in range(n_concepts):
        for lang in range(n_lang):
            if draw(st.booleans()):
                continue
            rows.append(row(rid, f"L{lang}", f"c{c}",
                            cogid=draw(st.integers(1, 3))))
            rid += 1
    return Wordlist(rows, doculects=[f"L{i}" for i in range(n_lang)],
                    concepts=[f"c{i}" for i in range(n_concepts)])


@given(random_cognate_wordlists())
@settings(max_examples=150, deadline=None)
def test_encode_decode_partition_faithful(wordlist):
    matrix = encode_binary(wordlist)
    assert decode_partition(matrix) == {
        (r.doculect, r.concept): r.cogid for r in wordlist}


@given(random_cognate_wordlists())
@settings(max_examples=150, deadline=None)
def test_group_row_sums(wordlist):
    matrix = encode_binary(wordlist)
    taxa_index = {taxon: i for i, taxon in enumerate(matrix.taxa)}
    groups = {}
    for idx, (concept, _) in enumerate(matrix.columns):
        groups.setdefault(concept, []).append(idx)
    covered = {(r.doculect, r.concept) for r in wordlist}
    for concept, idxs in groups.items():
        block = matrix.cells[:, idxs]
        for taxon, t in taxa_index.items():
            if (taxon, concept) in covered:
                assert (block[t] == 1).sum() == 1
                assert (block[t] != MISSING).all()
            else:
                assert (block[t] == MISSING).all()


class TestDropConstant:
    def test_all_one_column_removed(self):
        rows = [row(1, "L1", "hand", 1), row(2, "L2", "hand", 1)]
        matrix = encode_binary(Wordlist(rows, doculects=["L1", "L2", "L3"]))
        pruned, removed = drop_constant_columns(matrix)
        assert removed == [("hand", 1)]
        assert pruned.shape == (3, 0)

    def test_split_column_kept(self):
        rows = [row(1, "L1", "hand", 1), row(2, "L2", "hand", 2)]
        matrix = encode_binary(Wordlist(rows))
        pruned, removed = drop_constant_columns(matrix)
        assert removed == []
        assert pruned.shape == matrix.shape

    def test_counts(self):
        rows = [
            row(1, "L1", "c1", 1), row(2, "L2", "c1", 1),
            row(3, "L1", "c2", 1), row(4, "L2", "c2", 2),
            row(5, "L1", "c3", 1), row(6, "L2", "c3", 1),
        ]
        matrix = encode_binary(Wordlist(rows))
        assert matrix.shape[1] == 4
        pruned, removed = drop_constant_columns(matrix)
        assert len(removed) == 2
        assert pruned.shape[1] == 2


class TestAmc:
    def test_complete_coverage(self):
        concepts = ["c1", "c2", "c3", "c4"]
        wl = coverage_wordlist({"L1": concepts, "L2": concepts}, concepts)
        assert amc(wl) == 1.0

    def test_disjoint_coverage(self):
        wl = coverage_wordlist({"L1": ["c1", "c2"], "L2": ["c3", "c4"]},
                               ["c1", "c2", "c3", "c4"])
        assert amc(wl) == 0.0

    def test_three_language_hand_example(self):
        # pairs share 1, 2 and 1 concepts out of 4: mean = 1/3
        wl = coverage_wordlist(
            {"L1": ["c1", "c2"], "L2": ["c2", "c3"], "L3": ["c1", "c2", "c4"]},
            ["c1", "c2", "c3", "c4"])
        assert amc(wl) == pytest.approx(1 / 3)

    def test_nested_coverage_value(self):
        # pairs: AB+BC share 1 concept, AB+ABCD share 2, BC+ABCD share 2
        wl = coverage_wordlist(
            {"L1": ["c1", "c2"], "L2": ["c2", "c3"],
             "L3": ["c1", "c2", "c3", "c4"]},
            ["c1", "c2", "c3", "c4"])
        assert amc(wl) == pytest.approx(5 / 12)

    def test_single_language_rejected(self):
        wl = coverage_wordlist({"L1": ["c1"]}, ["c1"])
        with pytest.raises(DataError):
            amc(wl)

    @given(random_cognate_wordlists(), st.data())
    @settings(max_examples=100, deadline=None)
    def test_row_deletion_never_increases(self, wordlist, data):
        if len(wordlist) == 0:
            return
        before = amc(wordlist)
        keep = data.draw(st.lists(st.booleans(), min_size=len(wordlist),
                                  max_size=len(wordlist)))
        pruned = wordlist.with_rows(
            [r for r, k in zip(wordlist.rows, keep) if k])
        assert amc(pruned) <= before + 1e-12


class TestStats:
    def test_toy_complete(self):
        wl = coverage_wordlist({"L1": ["c1", "c2"], "L2": ["c1", "c2"]},
                               ["c1", "c2"])
        stats = dataset_stats(wl)
        assert stats.as_row() == (2, 2, 2.0, 2.0, 1.0)

    def test_means_match_recount(self):
        coverage = {"L1": ["c1", "c2", "c3"], "L2": ["c1"],
                    "L3": ["c2", "c3"]}
        wl = coverage_wordlist(coverage, ["c1", "c2", "c3"])
        stats = dataset_stats(wl)
        n_rows = sum(len(v) for v in coverage.values())
        assert stats.n_languages == 3
        assert stats.n_synsets == 3
        assert stats.langs_per_synset == pytest.approx(n_rows / 3)
        assert stats.synsets_per_lang == pytest.approx(n_rows / 3)

    def test_tsv_shape(self, tmp_path):
        wl = coverage_wordlist({"L1": ["c1", "c2"], "L2": ["c1", "c2"]},
                               ["c1", "c2"])
        path = tmp_path / "stats.tsv"
        write_stats_tsv(dataset_stats(wl), path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].split("\t") == [
            "n_languages", "n_synsets", "langs_per_synset",
            "synsets_per_lang", "amc"]
        assert lines[1].split("\t") == ["2", "2", "2.0000", "2.0000",
                                        "1.0000"]


class TestSparsity:
    def test_complete_grid(self):
        wl = coverage_wordlist({"L1": ["c1", "c2"], "L2": ["c1", "c2"]},
                               ["c1", "c2"])
        grid, langs, concepts = sparsity_grid(wl)
        assert grid.all()
        assert grid.shape == (2, 2)

    def test_empty_wordlist(self):
        grid, langs, concepts = sparsity_grid(Wordlist([]))
        assert grid.size == 0

    def test_three_missing_cells(self):
        wl = coverage_wordlist(
            {"L1": ["c1", "c2", "c3"], "L2": ["c1"], "L3": ["c2"]},
            ["c1", "c2", "c3"])
        grid, _, _ = sparsity_grid(wl)
        assert int((~grid).sum()) == 4

    def test_unknown_language_in_order(self):
        wl = coverage_wordlist({"L1": ["c1"], "L2": ["c1"]}, ["c1"])
        with pytest.raises(DataError):
            sparsity_grid(wl, language_order=["L1"])

    def test_tsv_and_svg(self, tmp_path):
        wl = coverage_wordlist({"L1": ["c1", "c2"], "L2": ["c1"]},
                               ["c1", "c2"])
        grid, _, _ = sparsity_grid(wl)
        tsv = tmp_path / "grid.tsv"
        svg = tmp_path / "grid.svg"
        write_sparsity_tsv(grid, tsv)
        write_sparsity_svg(grid, svg)
        assert tsv.read_text(encoding="utf-8") == "1\t1\n1\t0\n"
        body = svg.read_text(encoding="utf-8")
        assert body.count("<rect") == 1 + 3  # background + filled cells


def demo_matrix():
    rows = [row(1, "L1", "hand", 1), row(2, "L2", "hand", 1),
            row(3, "L3", "hand", 2), row(4, "L1", "foot", 4),
            row(5, "L3", "foot", 4)]
    return encode_binary(Wordlist(rows))


class TestWriters:
    def test_phylip_line_count(self, tmp_path):
        rows = [row(1, "L1", "hand", 1), row(2, "L2", "hand", 2)]
        matrix = encode_binary(Wordlist(rows))
        path = tmp_path / "m.phy"
        write_phylip(matrix, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 3
        assert lines[0] == "2 2"

    def test_phylip_round_trip(self, tmp_path):
        matrix = demo_matrix()
        path = tmp_path / "m.phy"
        write_phylip(matrix, path)
        assert read_phylip(path, columns=matrix.columns) == matrix

    def test_nexus_round_trip(self, tmp_path):
        matrix = demo_matrix()
        path = tmp_path / "m.nex"
        write_nexus(matrix, path)
        assert read_nexus(path, columns=matrix.columns) == matrix

    def test_nexus_declares_format(self, tmp_path):
        path = tmp_path / "m.nex"
        write_nexus(demo_matrix(), path)
        body = path.read_text(encoding="utf-8")
        assert 'DATATYPE=STANDARD' in body
        assert 'SYMBOLS="01"' in body
        assert 'MISSING=?' in body

    def test_columns_meta_round_trip(self, tmp_path):
        matrix = demo_matrix()
        path = tmp_path / "cols.tsv"
        write_columns_meta(matrix, path)
        assert read_columns_meta(path) == list(matrix.columns)

    def test_whitespace_taxon_rejected(self, tmp_path):
        matrix = CharacterMatrix(["a b"], [("c", 1)], [[1]])
        with pytest.raises(DataError):
            write_phylip(matrix, tmp_path / "m.phy")


class TestMatrixInvariants:
    def test_partial_missing_group_rejected(self):
        cells = [[1, MISSING]]
        with pytest.raises(DataError):
            CharacterMatrix(["L1"], [("c", 1), ("c", 2)], cells)

    def test_two_ones_in_group_rejected(self):
        cells = [[1, 1]]
        with pytest.raises(DataError):
            CharacterMatrix(["L1"], [("c", 1), ("c", 2)], cells)

    def test_all_missing_column_rejected(self):
        cells = [[MISSING], [MISSING]]
        with pytest.raises(DataError):
            CharacterMatrix(["L1", "L2"], [("c", 1)], cells)
