"""Error-rate harness, the three-variant ablation, and the pipeline runner.

Error rates are word-level proportions: a pair counts as one error or one
success, never fractions of a word. Every run is a pure function of
(inputs, config, seed); artifacts carry no timestamps, so reruns are
byte-identical.
"""

import configparser
import hashlib
import json
import os
import unicodedata
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__
from . import ipa as ipa_mod
from .cluster import ClusterParams, assign_cognates
from .corpus import (Wordlist, load_language_map, load_synset_dump,
                     load_wordlist, write_wordlist)
from .errors import CogforgeError, DataError, PipelineError
from .g2p import backoff_detail, load_g2p_dir
from .ipa import default_sound_classes, load_sound_classes, to_sound_classes
from .matrix import (dataset_stats, drop_constant_columns, encode_binary,
                     sparsity_grid, write_columns_meta, write_nexus,
                     write_phylip, write_sparsity_svg, write_sparsity_tsv,
                     write_stats_tsv)
from .selection import (SelectionParams, availability_counts,
                        availability_histogram, filter_concept_synsets,
                        load_concept_list, materialize_wordlist,
                        select_by_concept_list, select_top_k,
                        write_histogram_tsv)
from .trees import (Tree, gq_distance, hamming_matrix, load_newick, nj_tree,
                    restrict_to_leaves, save_newick)

ABLATION_VARIANTS = ("original", "auto-token", "auto-both")


def _nfc(s):
    return unicodedata.normalize("NFC", s)


# ---------------------------------------------------------------------------
# error rates


@dataclass(frozen=True)
class LanguageRates:
    glottocode: str
    n: int
    e1: float = None
    e2: float = None
    untokenizable: int = 0

    @property
    def e2_exceeds_e1(self):
        return (self.e1 is not None and self.e2 is not None
                and self.e2 > self.e1)


@dataclass(frozen=True)
class ErrorRateReport:
    rows: tuple

    def by_language(self):
        return {r.glottocode: r for r in self.rows}

    def merged_with(self, other):
        """Combine two partial reports (e1 from one side, e2 from the other)."""
        mine = self.by_language()
        theirs = other.by_language()
        if set(mine) != set(theirs):
            raise DataError("reports cover different languages")
        rows = []
        for code in sorted(mine):
            a, b = mine[code], theirs[code]
            if a.n != b.n:
                raise DataError(f"{code}: reports disagree on word count")
            rows.append(LanguageRates(
                glottocode=code, n=a.n,
                e1=a.e1 if a.e1 is not None else b.e1,
                e2=a.e2 if a.e2 is not None else b.e2,
                untokenizable=max(a.untokenizable, b.untokenizable)))
        return ErrorRateReport(rows=tuple(rows))

    def flagged(self):
        return [r.glottocode for r in self.rows if r.e2_exceeds_e1]


def _check_pairs(pairs_by_lang):
    if not pairs_by_lang:
        raise DataError("no languages to report on")
    for code, pairs in pairs_by_lang.items():
        if not pairs:
            raise DataError(f"{code}: empty pair list")


def error_rate_exact(pairs_by_lang):
    """e1: fraction of (reference, candidate) pairs differing after NFC."""
    _check_pairs(pairs_by_lang)
    rows = []
    for code in sorted(pairs_by_lang):
        pairs = pairs_by_lang[code]
        wrong = sum(1 for ref, cand in pairs if _nfc(ref) != _nfc(cand))
        rows.append(LanguageRates(glottocode=code, n=len(pairs),
                                  e1=wrong / len(pairs)))
    return ErrorRateReport(rows=tuple(rows))


def error_rate_soundclass(pairs_by_lang, *, table=None,
                          merge_diphthongs=False):
    """e2: pairs whose sound-class sequences differ; both sides tokenized.

    A side that tokenizes to nothing makes the pair untokenizable: it
    counts as an error and is tallied separately.
    """
    _check_pairs(pairs_by_lang)
    if table is None:
        table = default_sound_classes()
    rows = []
    for code in sorted(pairs_by_lang):
        pairs = pairs_by_lang[code]
        wrong = 0
        untok = 0
        for ref, cand in pairs:
            ref_toks = ipa_mod.tokenize(ref, merge_diphthongs=merge_diphthongs)
            cand_toks = ipa_mod.tokenize(cand, merge_diphthongs=merge_diphthongs)
            if (not ref_toks and ref) or (not cand_toks and cand):
                wrong += 1
                untok += 1
                continue
            ref_classes = to_sound_classes(ref_toks, table, strict=False)
            cand_classes = to_sound_classes(cand_toks, table, strict=False)
            if ref_classes != cand_classes:
                wrong += 1
        rows.append(LanguageRates(glottocode=code, n=len(pairs),
                                  e2=wrong / len(pairs), untokenizable=untok))
    return ErrorRateReport(rows=tuple(rows))


def reveng_report(pairs_by_lang, *, table=None, merge_diphthongs=False):
    """Both error rates in one report."""
    return error_rate_exact(pairs_by_lang).merged_with(
        error_rate_soundclass(pairs_by_lang, table=table,
                              merge_diphthongs=merge_diphthongs))


def write_error_report_tsv(report, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("# error rates are word-level proportions\n")
        handle.write("glottocode\tn\te1\te2\tuntokenizable\te2_gt_e1\n")
        for row in report.rows:
            handle.write("%s\t%d\t%s\t%s\t%d\t%d\n" % (
                row.glottocode, row.n,
                "" if row.e1 is None else "%.4f" % row.e1,
                "" if row.e2 is None else "%.4f" % row.e2,
                row.untokenizable, int(row.e2_exceeds_e1)))


def load_pairs_tsv(path):
    """TSV `glottocode<TAB>reference<TAB>candidate` -> pairs per language."""
    pairs = {}
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n").split("\t")
        if header != ["glottocode", "reference", "candidate"]:
            raise DataError(
                f"{path}: expected columns glottocode reference candidate")
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise DataError(f"{path}: expected 3 fields, got {len(fields)}")
            pairs.setdefault(fields[0], []).append((fields[1], fields[2]))
    return pairs


def tokenization_error_rate(pairs, *, strict=False, merge_diphthongs=False):
    """Fraction of words whose tokenization differs from the reference."""
    if not pairs:
        raise DataError("no words to score")
    wrong = 0
    for text, reference in pairs:
        tokens = ipa_mod.tokenize(text, strict=strict,
                                  merge_diphthongs=merge_diphthongs)
        if [_nfc(t) for t in tokens] != [_nfc(t) for t in reference]:
            wrong += 1
    return wrong / len(pairs)


# ---------------------------------------------------------------------------
# ablation


def _as_ruleset_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


def ablate(wordlist, rulesets_by_doculect, gold_tree, params, *, table=None,
           runs=1000, external_trees=None, warn=None):
    """GQ distance of the three wordlist variants against the gold tree.

    original keeps reference IPA and tokens; auto-token re-tokenizes the
    reference IPA; auto-both re-transcribes from the orthographic form and
    tokenizes that. Doculects without rulesets are dropped from auto-both.
    Each variant is clustered, encoded, NJ-inferred, and scored on the
    intersection of its populated doculects with the gold leaves; an
    external tree for a variant is scored as provided.
    """
    warn = warn or (lambda msg: None)
    external_trees = external_trees or {}
    for row in wordlist:
        if row.ipa is None or row.tokens is None:
            raise DataError(f"row {row.row_id}: ablation needs IPA and tokens")

    results = {}
    for variant in ABLATION_VARIANTS:
        external = external_trees.get(variant)
        if external is not None:
            results[variant] = _score_tree(external, gold_tree)
            continue
        rows = _variant_rows(wordlist, variant, rulesets_by_doculect, warn)
        results[variant] = _score_variant(rows, wordlist, gold_tree, params,
                                          table=table, runs=runs, warn=warn,
                                          variant=variant)
    return results


def _variant_rows(wordlist, variant, rulesets_by_doculect, warn):
    if variant == "original":
        return list(wordlist)
    rows = []
    dropped_untok = 0
    missing_rules = set()
    for row in wordlist:
        ipa_text = row.ipa
        if variant == "auto-both":
            rules = rulesets_by_doculect.get(row.doculect)
            if rules is None:
                missing_rules.add(row.doculect)
                continue
            ipa_text = backoff_detail(_as_ruleset_list(rules), row.form).ipa
        tokens = ipa_mod.tokenize(ipa_text)
        if not tokens:
            dropped_untok += 1
            continue
        rows.append(replace(row, ipa=ipa_text, tokens=tuple(tokens)))
    for code in sorted(missing_rules):
        warn(f"{variant}: no G2P ruleset for {code}, doculect dropped")
    if dropped_untok:
        warn(f"{variant}: {dropped_untok} rows dropped (empty tokenization)")
    return rows


def _score_variant(rows, wordlist, gold_tree, params, *, table, runs, warn,
                   variant):
    populated = {r.doculect for r in rows}
    leaves = sorted(set(gold_tree.leaf_labels()) & populated)
    if len(leaves) < 4:
        raise DataError(f"{variant}: fewer than 4 scorable doculects")
    skipped = sorted(set(gold_tree.leaf_labels()) - populated)
    if skipped:
        warn(f"{variant}: gold leaves without data: {', '.join(skipped)}")
    kept = [r for r in rows if r.doculect in leaves]
    variant_wl = Wordlist(kept, doculects=leaves, concepts=wordlist.concepts,
                          synonyms=wordlist.synonyms)
    clustered = assign_cognates(variant_wl, params, table=table, runs=runs)
    matrix = encode_binary(clustered)
    inferred = nj_tree(hamming_matrix(matrix), matrix.taxa)
    return gq_distance(inferred, restrict_to_leaves(gold_tree, leaves))


def _score_tree(tree, gold_tree):
    extra = set(tree.leaf_labels()) - set(gold_tree.leaf_labels())
    if extra:
        raise DataError(f"tree has leaves outside the gold tree: {sorted(extra)}")
    return gq_distance(tree, restrict_to_leaves(gold_tree, tree.leaf_labels()))


def write_ablation_tsv(results, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("variant\tgq_distance\n")
        for variant in ABLATION_VARIANTS:
            if variant in results:
                handle.write("%s\t%.4f\n" % (variant, results[variant]))


# ---------------------------------------------------------------------------
# pipeline configuration


@dataclass
class PipelineConfig:
    out_dir: Path
    seed: int = 0
    dump: Path = None
    wordlist: Path = None
    language_map: Path = None
    concept_list: Path = None
    g2p_dir: Path = None
    sound_classes: Path = None
    languages: tuple = ()
    use_g2p: bool = False
    k: int = 5000
    method: str = "sca"
    threshold: float = None
    runs: int = 1000
    drop_constant: bool = False
    gold_tree: Path = None
    inferred_tree: Path = None
    raw_bytes: bytes = b""

    def validate(self):
        if (self.dump is None) == (self.wordlist is None):
            raise DataError("config needs exactly one of dump and wordlist")
        for name in ("dump", "wordlist", "language_map", "concept_list",
                     "g2p_dir", "sound_classes", "gold_tree", "inferred_tree"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise DataError(f"{name} path does not exist: {path}")
        if self.dump is not None:
            if self.language_map is None:
                raise DataError("dump input needs a language_map")
            if not self.languages:
                raise DataError("dump input needs selection languages")
        if self.use_g2p and self.g2p_dir is None:
            raise DataError("use_g2p needs a g2p_dir")
        return self


def load_config(path):
    parser = configparser.ConfigParser()
    raw = Path(path).read_bytes()
    parser.read_string(raw.decode("utf-8"), source=str(path))
    base = Path(path).resolve().parent

    def get_path(section, key):
        value = parser.get(section, key, fallback=None)
        return (base / value).resolve() if value else None

    languages = tuple(parser.get("selection", "languages",
                                 fallback="").replace(",", " ").split())
    config = PipelineConfig(
        out_dir=(base / parser.get("output", "dir", fallback="out")).resolve(),
        seed=parser.getint("output", "seed", fallback=0),
        dump=get_path("input", "dump"),
        wordlist=get_path("input", "wordlist"),
        language_map=get_path("input", "language_map"),
        concept_list=get_path("input", "concept_list"),
        g2p_dir=get_path("input", "g2p_dir"),
        sound_classes=get_path("input", "sound_classes"),
        languages=languages,
        use_g2p=parser.getboolean("selection", "use_g2p", fallback=False),
        k=parser.getint("selection", "k", fallback=5000),
        method=parser.get("cluster", "method", fallback="sca"),
        threshold=parser.getfloat("cluster", "threshold", fallback=None),
        runs=parser.getint("cluster", "runs", fallback=1000),
        drop_constant=parser.getboolean("output", "drop_constant",
                                        fallback=False),
        gold_tree=get_path("trees", "gold"),
        inferred_tree=get_path("trees", "inferred"),
        raw_bytes=raw,
    )
    return config.validate()


# ---------------------------------------------------------------------------
# pipeline runner


@contextmanager
def _stage(name):
    try:
        yield
    except PipelineError:
        raise
    except CogforgeError as exc:
        raise PipelineError(name, exc) from exc


@contextmanager
def _emit(path):
    """Write through a .partial name; only successful writes get renamed."""
    partial = Path(str(path) + ".partial")
    yield partial
    os.replace(partial, path)


def run_pipeline(config, warn=None):
    """Run every configured stage; returns the artifact directory."""
    warn = warn or (lambda msg: None)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    table = (load_sound_classes(config.sound_classes)
             if config.sound_classes else default_sound_classes())
    rulesets = load_g2p_dir(config.g2p_dir) if config.g2p_dir else {}

    if config.dump is not None:
        wordlist = _select_stage(config, table, rulesets, out, warn)
    else:
        with _stage("ingest"):
            wordlist = load_wordlist(config.wordlist)
            wordlist = _ensure_tokens(wordlist, warn)

    with _stage("cluster"):
        params = ClusterParams(method=config.method,
                               threshold=config.threshold, seed=config.seed)
        clustered = assign_cognates(wordlist, params, table=table,
                                    runs=config.runs)
        with _emit(out / "cognates.tsv") as path:
            write_wordlist(clustered, path)

    with _stage("encode"):
        matrix = encode_binary(clustered)
        if config.drop_constant:
            matrix, removed = drop_constant_columns(matrix)
            if removed:
                warn(f"encode: dropped {len(removed)} constant columns")
        with _emit(out / "matrix.phy") as path:
            write_phylip(matrix, path)
        with _emit(out / "matrix.nex") as path:
            write_nexus(matrix, path)
        with _emit(out / "columns.tsv") as path:
            write_columns_meta(matrix, path)

    with _stage("stats"):
        with _emit(out / "stats.tsv") as path:
            write_stats_tsv(dataset_stats(clustered), path)
        grid, _, _ = sparsity_grid(clustered)
        with _emit(out / "sparsity.tsv") as path:
            write_sparsity_tsv(grid, path)
        with _emit(out / "sparsity.svg") as path:
            write_sparsity_svg(grid, path)

    with _stage("trees"):
        _tree_stage(config, matrix, out, warn)

    with _stage("manifest"):
        manifest = {
            "config_sha256": hashlib.sha256(config.raw_bytes).hexdigest(),
            "seed": config.seed,
            "tool": "cogforge",
            "version": __version__,
        }
        with _emit(out / "manifest.json") as path:
            Path(path).write_text(
                json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                encoding="utf-8")
    return out


def _ensure_tokens(wordlist, warn):
    rows = []
    dropped = 0
    for row in wordlist:
        if row.tokens is not None:
            rows.append(row)
            continue
        tokens = ipa_mod.tokenize(row.ipa) if row.ipa else []
        if tokens:
            rows.append(replace(row, tokens=tuple(tokens)))
        else:
            dropped += 1
    if dropped:
        warn(f"ingest: {dropped} rows dropped (no usable IPA)")
    return wordlist.with_rows(rows)


def _select_stage(config, table, rulesets, out, warn):
    with _stage("ingest"):
        store = load_synset_dump(config.dump)
        lang_map = load_language_map(config.language_map)
    with _stage("select"):
        concept_list = (load_concept_list(config.concept_list)
                        if config.concept_list else None)
        params = SelectionParams(languages=config.languages,
                                 use_g2p=config.use_g2p, k=config.k,
                                 concept_list=concept_list)
        store = filter_concept_synsets(store)
        g2p_supported = set(rulesets) if config.use_g2p else set()
        counts = availability_counts(store, params, g2p_supported, lang_map)
        hist = availability_histogram(counts, use_g2p=config.use_g2p)
        with _emit(out / "histogram.tsv") as path:
            write_histogram_tsv(hist, path)
        if params.mode == "topk":
            selected = select_top_k(counts, params)
            by_id = {c.synset_id: c for c in counts}
            with _emit(out / "selected.tsv") as path:
                with open(path, "w", encoding="utf-8") as handle:
                    handle.write("synset_id\tn_ipa\tn_ipa_or_g2p\n")
                    for sid in selected:
                        c = by_id[sid]
                        handle.write(f"{sid}\t{c.n_ipa}\t{c.n_ipa_or_g2p}\n")
        else:
            result = select_by_concept_list(store, concept_list, params,
                                            counts, lang_map)
            for lemma in result.unresolved:
                warn(f"select: unresolved concept {lemma!r}")
            selected = list(result.chosen)
            with _emit(out / "selected.tsv") as path:
                with open(path, "w", encoding="utf-8") as handle:
                    handle.write("concept\tsynset_id\n")
                    for lemma, sid in selected:
                        handle.write(f"{lemma}\t{sid}\n")
        wordlist, report = materialize_wordlist(
            store, selected, params, rulesets, lang_map,
            g2p_supported=g2p_supported or None)
        for reason in sorted(report.dropped):
            warn(f"select: {report.dropped[reason]} rows dropped ({reason})")
        with _emit(out / "wordlist.tsv") as path:
            write_wordlist(wordlist, path)
    return wordlist


def _tree_stage(config, matrix, out, warn):
    if len(matrix.taxa) < 3:
        warn("trees: fewer than 3 taxa, skipping tree inference")
        return
    inferred = nj_tree(hamming_matrix(matrix), matrix.taxa)
    with _emit(out / "inferred_nj.nwk") as path:
        save_newick(inferred, path)
    if config.gold_tree is None:
        return
    gold = load_newick(config.gold_tree)
    comparisons = [("nj", inferred)]
    if config.inferred_tree is not None:
        comparisons.append(("external", load_newick(config.inferred_tree)))
    with _emit(out / "gqd.tsv") as path:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("comparison\tn_leaves\tgq_distance\n")
            for name, tree in comparisons:
                leaves = sorted(set(tree.leaf_labels())
                                & set(gold.leaf_labels()))
                if len(leaves) < 4:
                    raise DataError(
                        f"{name}: fewer than 4 shared leaves with gold tree")
                value = gq_distance(restrict_to_leaves(tree, leaves),
                                    restrict_to_leaves(gold, leaves))
                handle.write("%s\t%d\t%.4f\n" % (name, len(leaves), value))
