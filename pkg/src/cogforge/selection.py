"""Synset selection strategies and wordlist materialization.

Selection works over glottocodes (the unit of study) while dump senses are
keyed by ISO code, so every operation that touches senses takes the
iso-to-glottocode mapping loaded by `corpus.load_language_map`.
"""

from dataclasses import dataclass, field

from . import ipa as ipa_mod
from .corpus import Wordlist, WordRow
from .errors import DataError, ParseError
from .g2p import backoff_detail


@dataclass(frozen=True)
class AvailabilityCount:
    synset_id: str
    n_ipa: int
    n_ipa_or_g2p: int

    def __post_init__(self):
        if not 0 <= self.n_ipa <= self.n_ipa_or_g2p:
            raise DataError(
                f"synset {self.synset_id}: counts {self.n_ipa}, "
                f"{self.n_ipa_or_g2p} out of order")


@dataclass(frozen=True)
class SelectionParams:
    languages: frozenset
    use_g2p: bool = False
    k: int = 5000
    concept_list: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "languages", frozenset(self.languages))
        if self.k < 1:
            raise DataError(f"k must be >= 1, got {self.k}")
        if not self.languages:
            raise DataError("no languages under study")
        if self.concept_list is not None:
            object.__setattr__(self, "concept_list", tuple(self.concept_list))

    @property
    def mode(self):
        return "topk" if self.concept_list is None else "conceptlist"


def filter_concept_synsets(store):
    """Drop named entities, keeping only concept synsets."""
    return type(store)([s for s in store if s.kind == "concept"])


def _sense_glottocodes(sense, lang_map):
    if sense.lang.glottocode is not None:
        return (sense.lang.glottocode,)
    return tuple(lang_map.get(sense.lang.iso, ()))


def availability_counts(store, params, g2p_supported, lang_map):
    """Per-synset language availability, dropping synsets with no dump IPA.

    n_ipa counts study languages with a main sense carrying an IPA string;
    n_ipa_or_g2p additionally counts languages in g2p_supported that have
    any main sense at all.
    """
    study = params.languages
    counts = []
    for synset in store:
        with_ipa = set()
        with_main = set()
        for sense in synset.senses:
            if not sense.is_main:
                continue
            covered = study.intersection(_sense_glottocodes(sense, lang_map))
            with_main.update(covered)
            if sense.ipa:
                with_ipa.update(covered)
        if not with_ipa:
            continue
        extra = with_main & set(g2p_supported)
        counts.append(AvailabilityCount(
            synset_id=synset.id,
            n_ipa=len(with_ipa),
            n_ipa_or_g2p=len(with_ipa | extra)))
    return counts


def _sort_key_value(count, params):
    return count.n_ipa_or_g2p if params.use_g2p else count.n_ipa


def select_top_k(counts, params):
    """Ids of the k best-covered synsets, ties broken by id."""
    ranked = sorted(counts, key=lambda c: (-_sort_key_value(c, params),
                                           c.synset_id))
    return [c.synset_id for c in ranked[:params.k]]


@dataclass(frozen=True)
class ConceptSelection:
    chosen: tuple          # (lemma, synset_id) pairs in input order
    unresolved: tuple      # lemmas with no candidate synset


def select_by_concept_list(store, concept_list, params, counts, lang_map):
    """Resolve each English lemma to one synset.

    Candidates contain the lemma as an English sense; when any candidate's
    English main sense is key-flagged, the non-key candidates are dropped;
    the best availability count wins, ties broken by synset id.
    """
    by_id = {c.synset_id: c for c in counts}
    chosen = []
    unresolved = []
    for lemma in concept_list:
        folded = lemma.casefold()
        candidates = []
        for synset in store:
            hit = any(s.lang.iso == "eng" and s.lemma.casefold() == folded
                      for s in synset.senses)
            if not hit:
                continue
            main = synset.main_sense("eng")
            candidates.append((synset.id, bool(main and main.is_key)))
        if not candidates:
            unresolved.append(lemma)
            continue
        if any(key for _, key in candidates):
            candidates = [(sid, key) for sid, key in candidates if key]
        def rank(item):
            sid = item[0]
            count = by_id.get(sid)
            return (-(_sort_key_value(count, params) if count else 0), sid)
        candidates.sort(key=rank)
        chosen.append((lemma, candidates[0][0]))
    return ConceptSelection(chosen=tuple(chosen), unresolved=tuple(unresolved))


@dataclass
class MaterializeReport:
    rows: int = 0
    dropped: dict = field(default_factory=dict)

    def bump(self, reason):
        self.dropped[reason] = self.dropped.get(reason, 0) + 1


def materialize_wordlist(store, selected, params, rulesets_by_glottocode,
                         lang_map, *, g2p_supported=None):
    """One row per (selected synset, study language) with a usable main sense.

    `selected` holds synset ids, or (concept label, synset id) pairs from
    concept-list mode. IPA comes from the dump when present, otherwise from
    G2P for supported languages. Rows whose IPA fails strict tokenization
    are dropped and counted in the report.
    """
    if g2p_supported is None:
        g2p_supported = set(rulesets_by_glottocode) if params.use_g2p else set()
    if params.use_g2p:
        missing = set(g2p_supported) - set(rulesets_by_glottocode)
        if missing:
            raise DataError(
                "no G2P rulesets for %s" % ", ".join(sorted(missing)))

    report = MaterializeReport()
    rows = []
    row_id = 0
    concepts = []
    for item in selected:
        concept, synset_id = (item, item) if isinstance(item, str) else item
        concepts.append(concept)
        synset = store.get(synset_id)
        if synset is None:
            raise DataError(f"selected synset {synset_id} not in store")
        by_lang = {}
        for sense in synset.senses:
            if not sense.is_main:
                continue
            for code in _sense_glottocodes(sense, lang_map):
                if code in params.languages:
                    by_lang.setdefault(code, []).append(sense)
        for code in sorted(by_lang):
            senses = sorted(by_lang[code],
                            key=lambda s: (0 if s.ipa else 1, s.lang.iso))
            sense = senses[0]
            if sense.ipa:
                ipa = sense.ipa
            elif params.use_g2p and code in g2p_supported:
                rules = rulesets_by_glottocode[code]
                if not isinstance(rules, (list, tuple)):
                    rules = [rules]
                ipa = backoff_detail(rules, sense.lemma).ipa
            else:
                report.bump("no_ipa")
                continue
            if not ipa:
                report.bump("empty_transcription")
                continue
            try:
                tokens = ipa_mod.tokenize(ipa, strict=True)
            except ParseError:
                report.bump("invalid_ipa")
                continue
            row_id += 1
            rows.append(WordRow(row_id=row_id, doculect=code,
                                concept=concept, form=sense.lemma, ipa=ipa,
                                tokens=tuple(tokens)))
    report.rows = len(rows)
    wordlist = Wordlist(rows, doculects=sorted(params.languages),
                        concepts=_ordered_unique(concepts))
    return wordlist, report


def _ordered_unique(items):
    seen = set()
    out = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


def availability_histogram(counts, *, use_g2p=False):
    """(n_languages, n_synsets) pairs, ascending by n_languages."""
    tally = {}
    for count in counts:
        value = count.n_ipa_or_g2p if use_g2p else count.n_ipa
        tally[value] = tally.get(value, 0) + 1
    return sorted(tally.items())


def write_histogram_tsv(hist, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("n_languages\tn_synsets\n")
        for n_langs, n_syn in hist:
            handle.write(f"{n_langs}\t{n_syn}\n")


def load_concept_list(path):
    """One English lemma per line; blank lines and % comments skipped."""
    lemmas = []
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            line = raw.strip()
            if line and not line.startswith("%"):
                lemmas.append(line)
    return lemmas
