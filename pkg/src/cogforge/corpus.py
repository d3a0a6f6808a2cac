"""Domain types and loaders: synset dumps, wordlists, language-code maps.

Everything here is immutable after construction and safe to share across
workers. The wordlist TSV is the interchange format between all pipeline
stages; loaders round-trip byte-identically with the writers.
"""

import csv
import json
import re
import unicodedata
from dataclasses import dataclass, field

from .errors import DataError, ParseError

ISO_RE = re.compile(r"[a-z]{2,3}\Z")
GLOTTOCODE_RE = re.compile(r"[a-z0-9]{4}[0-9]{4}\Z")

WORDLIST_COLUMNS = ("ID", "DOCULECT", "CONCEPT", "FORM", "IPA", "TOKENS", "COGID")


def _nfc(s):
    return unicodedata.normalize("NFC", s)


@dataclass(frozen=True)
class LanguageRef:
    """A language identified by ISO-639-3 code, optionally tied to a glottocode."""

    iso: str
    glottocode: str | None = None

    def __post_init__(self):
        if not ISO_RE.fullmatch(self.iso):
            raise DataError(f"invalid ISO code {self.iso!r}: want 2-3 lowercase letters")
        if self.glottocode is not None and not GLOTTOCODE_RE.fullmatch(self.glottocode):
            raise DataError(f"invalid glottocode {self.glottocode!r}")


@dataclass(frozen=True)
class Sense:
    lang: LanguageRef
    lemma: str
    is_main: bool = False
    is_key: bool = False
    ipa: str | None = None

    def __post_init__(self):
        if not self.lemma:
            raise DataError("sense with empty lemma")


@dataclass(frozen=True)
class Synset:
    """One concept/entity with its per-language senses."""

    id: str
    kind: str
    senses: tuple[Sense, ...]

    def __post_init__(self):
        if self.kind not in ("concept", "entity"):
            raise DataError(f"synset {self.id}: unknown kind {self.kind!r}")
        mains = set()
        for sense in self.senses:
            if sense.is_main:
                if sense.lang.iso in mains:
                    raise DataError(
                        f"synset {self.id}: duplicate main sense for language {sense.lang.iso}"
                    )
                mains.add(sense.lang.iso)

    def main_sense(self, iso):
        for sense in self.senses:
            if sense.is_main and sense.lang.iso == iso:
                return sense
        return None

    @property
    def languages(self):
        return {s.lang for s in self.senses}


class SynsetStore:
    """Id-indexed synset collection preserving input order."""

    def __init__(self, synsets):
        self._synsets = {}
        for synset in synsets:
            if synset.id in self._synsets:
                raise DataError(f"duplicate synset id {synset.id}")
            self._synsets[synset.id] = synset

    def __len__(self):
        return len(self._synsets)

    def __iter__(self):
        return iter(self._synsets.values())

    def __contains__(self, synset_id):
        return synset_id in self._synsets

    def get(self, synset_id):
        return self._synsets[synset_id]

    @property
    def languages(self):
        langs = set()
        for synset in self:
            langs |= synset.languages
        return langs


@dataclass(frozen=True)
class WordRow:
    """One (doculect, concept) entry of a wordlist."""

    row_id: int
    doculect: str
    concept: str
    form: str = ""
    ipa: str | None = None
    tokens: tuple[str, ...] | None = None
    cogid: int | None = None

    def __post_init__(self):
        if not self.form and not self.ipa:
            raise DataError(f"row {self.row_id}: needs at least one of FORM and IPA")
        if self.tokens is not None and self.ipa is None:
            raise DataError(f"row {self.row_id}: TOKENS without IPA")


class Wordlist:
    """Ordered word rows plus the doculect/concept universes they live in.

    The universes default to what the rows mention, but they are stored
    explicitly: stats such as mutual coverage are defined relative to the
    declared sets, and subsetting rows must not silently shrink them.
    """

    def __init__(self, rows, doculects=None, concepts=None, synonyms=False):
        self.rows = tuple(rows)
        if doculects is None:
            doculects = _ordered_unique(r.doculect for r in self.rows)
        else:
            doculects = tuple(doculects)
        if concepts is None:
            concepts = _ordered_unique(r.concept for r in self.rows)
        else:
            concepts = tuple(concepts)
        self.doculects = doculects
        self.concepts = concepts
        self.synonyms = synonyms

        known_d, known_c = set(doculects), set(concepts)
        ids = set()
        seen = set()
        for row in self.rows:
            if row.row_id in ids:
                raise DataError(f"duplicate row id {row.row_id}")
            ids.add(row.row_id)
            if row.doculect not in known_d:
                raise DataError(f"row {row.row_id}: doculect {row.doculect} not in declared set")
            if row.concept not in known_c:
                raise DataError(f"row {row.row_id}: concept {row.concept!r} not in declared set")
            key = (row.doculect, row.concept)
            if key in seen and not synonyms:
                raise DataError(
                    f"row {row.row_id}: duplicate (doculect, concept) {key} with synonyms disabled"
                )
            seen.add(key)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def with_rows(self, rows):
        """Same universes, different rows (row deletion keeps the declared sets)."""
        return Wordlist(rows, doculects=self.doculects, concepts=self.concepts,
                        synonyms=self.synonyms)

    def rows_by_concept(self):
        by_concept = {c: [] for c in self.concepts}
        for row in self.rows:
            by_concept[row.concept].append(row)
        return by_concept

    def coverage(self, doculect):
        return {r.concept for r in self.rows if r.doculect == doculect}


def _ordered_unique(items):
    seen = {}
    for item in items:
        seen.setdefault(item, None)
    return tuple(seen)


# ---------------------------------------------------------------------------
# language map


def load_language_map(path):
    """Read the iso,glottocode,priority CSV into {iso: [glottocode, ...]}.

    Lists are sorted by ascending priority; unmapped ISO codes are simply
    absent from the result.
    """
    entries = []
    seen = set()
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["iso", "glottocode", "priority"]:
            raise ParseError("expected header 'iso,glottocode,priority'", path=path, line=1)
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 3:
                raise ParseError(f"expected 3 fields, got {len(rec)}", path=path, line=lineno)
            iso, glottocode, prio_text = (f.strip() for f in rec)
            if not ISO_RE.fullmatch(iso):
                raise ParseError(f"invalid ISO code {iso!r}", path=path, line=lineno)
            if not GLOTTOCODE_RE.fullmatch(glottocode):
                raise ParseError(f"invalid glottocode {glottocode!r}", path=path, line=lineno)
            try:
                priority = int(prio_text)
            except ValueError:
                raise ParseError(f"invalid priority {prio_text!r}", path=path, line=lineno) from None
            if (iso, glottocode) in seen:
                raise ParseError(f"duplicate mapping {iso},{glottocode}", path=path, line=lineno)
            seen.add((iso, glottocode))
            entries.append((iso, priority, glottocode))

    mapping = {}
    for iso, _prio, glottocode in sorted(entries, key=lambda e: e[1]):
        mapping.setdefault(iso, []).append(glottocode)
    return mapping


def resolve_language(iso, mapping):
    """First-priority glottocode for an ISO code, or None if unmapped."""
    codes = mapping.get(iso)
    return codes[0] if codes else None


# ---------------------------------------------------------------------------
# synset dumps (JSON lines, one synset per line)


def load_synset_dump(path):
    synsets = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path=path, line=lineno) from None
            try:
                synsets.append(_synset_from_obj(obj))
            except (DataError, KeyError, TypeError) as exc:
                raise ParseError(f"invalid synset: {exc}", path=path, line=lineno) from None
    return SynsetStore(synsets)


def _synset_from_obj(obj):
    senses = []
    for s in obj.get("senses", []):
        senses.append(Sense(
            lang=LanguageRef(iso=s["lang"]),
            lemma=_nfc(s["lemma"]),
            is_main=bool(s.get("main", False)),
            is_key=bool(s.get("key", False)),
            ipa=_nfc(s["ipa"]) if s.get("ipa") else None,
        ))
    return Synset(id=obj["id"], kind=obj["kind"], senses=tuple(senses))


def write_synset_dump(store, path):
    with open(path, "w", encoding="utf-8") as handle:
        for synset in store:
            obj = {
                "id": synset.id,
                "kind": synset.kind,
                "senses": [_sense_to_obj(s) for s in synset.senses],
            }
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _sense_to_obj(sense):
    obj = {"lang": sense.lang.iso, "lemma": sense.lemma}
    if sense.is_main:
        obj["main"] = True
    if sense.is_key:
        obj["key"] = True
    if sense.ipa is not None:
        obj["ipa"] = sense.ipa
    return obj


# ---------------------------------------------------------------------------
# wordlist TSV


def load_wordlist(path, synonyms=False):
    rows = []
    with open(path, encoding="utf-8", newline="") as handle:
        header_line = handle.readline()
        header = tuple(header_line.rstrip("\n").split("\t"))
        if header != WORDLIST_COLUMNS:
            raise ParseError(
                f"expected columns {' '.join(WORDLIST_COLUMNS)}, got {' '.join(header)}",
                path=path, line=1,
            )
        for lineno, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != len(WORDLIST_COLUMNS):
                raise ParseError(f"expected {len(WORDLIST_COLUMNS)} fields, got {len(fields)}",
                                 path=path, line=lineno)
            row_id_text, doculect, concept, form, ipa, tokens, cogid = fields
            try:
                row = WordRow(
                    row_id=int(row_id_text),
                    doculect=doculect,
                    concept=concept,
                    form=form,
                    ipa=ipa or None,
                    tokens=tuple(tokens.split(" ")) if tokens else None,
                    cogid=int(cogid) if cogid else None,
                )
            except (ValueError, DataError) as exc:
                raise ParseError(f"bad row: {exc}", path=path, line=lineno) from None
            rows.append(row)
    return Wordlist(rows, synonyms=synonyms)


def write_wordlist(wordlist, path):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\t".join(WORDLIST_COLUMNS) + "\n")
        for row in wordlist:
            fields = (
                str(row.row_id),
                row.doculect,
                row.concept,
                _nfc(row.form),
                _nfc(row.ipa) if row.ipa else "",
                " ".join(_nfc(t) for t in row.tokens) if row.tokens else "",
                str(row.cogid) if row.cogid is not None else "",
            )
            handle.write("\t".join(fields) + "\n")
