"""IPA tokenization and sound-class conversion.

Tokens are maximal segment strings: a base letter plus everything attached
to it (combining diacritics, superscript modifiers, length marks), with tie
bars joining two base letters into a single token. Stress marks, syllable
and phrase boundaries, tone letters and whitespace are discarded. Input is
processed in NFD; emitted tokens are NFC.
"""

import csv
import unicodedata
from functools import lru_cache
from importlib import resources

from .errors import DataError, ParseError

_ASCII = set("abcdefghijklmnopqrstuvwxyz")
_IPA_BLOCK = {chr(cp) for cp in range(0x0250, 0x02B0)}
_EXTRA = set("æçðøħŋœβθχǀǁǂǃ")
BASE_LETTERS = frozenset(_ASCII | _IPA_BLOCK | _EXTRA)

VOWELS = frozenset("aeiouyæøœ"
                   "ɐɑɒɔɘəɚɛɜ"
                   "ɝɞɤɨɩɪɯɵɶ"
                   "ɷɿʅʉʊʌʏʚʮʯ")

TIE_BARS = frozenset("͜͡")
STRESS_MARKS = frozenset("ˈˌ")
# tone letters, pitch arrows, up/downstep: suprasegmental, never token content
_SUPRASEGMENTAL = frozenset("˥˦˧˨˩↗↘ꜛꜜ")
_BOUNDARY = frozenset(".|‖‿")


def _is_modifier(ch):
    # spacing modifiers attach to a neighboring base letter; stress and tone
    # marks are handled as discards before this test is reached
    cat = unicodedata.category(ch)
    return cat == "Lm" or (cat == "Sk" and "ʰ" <= ch <= "˿")


def tokenize(ipa, *, strict=False, merge_diphthongs=False):
    """Split an IPA string into segment tokens.

    strict: raise ParseError on any character that is not an IPA letter,
    an attachable mark, a tie bar, or a discardable; lenient mode drops
    such characters. merge_diphthongs: join runs of adjacent vowel tokens.
    """
    text = unicodedata.normalize("NFD", ipa)
    tokens = []
    cur = []
    prefix = []          # (char, offset) modifiers waiting for a base letter
    join_next = False    # tie bar seen: next base letter stays in cur

    def close():
        nonlocal cur, join_next
        if cur:
            tokens.append(unicodedata.normalize("NFC", "".join(cur)))
        cur = []
        join_next = False

    def drop_prefix():
        nonlocal prefix
        if prefix and strict:
            ch, pos = prefix[0]
            raise ParseError(
                "modifier %r has no following letter" % ch, offset=pos)
        prefix = []

    for pos, ch in enumerate(text):
        if ch.isspace() or ch in STRESS_MARKS or ch in _SUPRASEGMENTAL \
                or ch in _BOUNDARY:
            drop_prefix()
            close()
        elif ch in BASE_LETTERS:
            if join_next:
                cur.append(ch)
                join_next = False
            else:
                close()
                cur = [c for c, _ in prefix] + [ch]
                prefix = []
        elif ch in TIE_BARS:
            if cur:
                cur.append(ch)
                join_next = True
            elif strict:
                raise ParseError(
                    "tie bar has no preceding letter", offset=pos)
        elif unicodedata.category(ch) == "Mn":
            if cur:
                cur.append(ch)
            elif prefix:
                prefix.append((ch, pos))
            elif strict:
                raise ParseError(
                    "combining mark %r has no base letter" % ch, offset=pos)
        elif _is_modifier(ch):
            if cur:
                cur.append(ch)
            else:
                prefix.append((ch, pos))
        elif strict:
            raise ParseError("not an IPA character: %r" % ch, offset=pos)
    drop_prefix()
    close()

    if merge_diphthongs:
        tokens = _merge_vowel_runs(tokens)
    return tokens


def _first_base(token):
    for ch in unicodedata.normalize("NFD", token):
        if ch in BASE_LETTERS:
            return ch
    return ""


def _merge_vowel_runs(tokens):
    merged = []
    for tok in tokens:
        if merged and _first_base(tok) in VOWELS \
                and _first_base(merged[-1]) in VOWELS:
            merged[-1] = merged[-1] + tok
        else:
            merged.append(tok)
    return merged


class SoundClassTable:
    """Mapping from IPA symbols (diacritics stripped) to class labels.

    Entries may be multi-letter (affricate digraphs); lookup tries the whole
    stripped token first, then its first base letter. The table must cover
    every base letter, and every vowel must map to V.
    """

    def __init__(self, entries):
        for symbol, label in entries.items():
            if not symbol:
                raise DataError("empty symbol in sound-class table")
            if len(label) != 1 or not label.isupper():
                raise DataError(
                    "bad class label %r for symbol %r" % (label, symbol))
        missing = sorted(BASE_LETTERS - set(entries))
        if missing:
            raise DataError(
                "sound-class table misses %d base letters, e.g. %r"
                % (len(missing), missing[:5]))
        wrong = sorted(v for v in VOWELS if entries[v] != "V")
        if wrong:
            raise DataError(
                "vowels not mapped to V: %r" % wrong[:5])
        self.entries = dict(entries)

    @property
    def classes(self):
        return sorted(set(self.entries.values()))

    def label(self, token, *, strict=True):
        skeleton = "".join(ch for ch in unicodedata.normalize("NFD", token)
                           if ch in BASE_LETTERS)
        hit = self.entries.get(skeleton)
        if hit is None and skeleton:
            hit = self.entries.get(skeleton[0])
        if hit is None:
            if strict:
                raise DataError("no sound class for token %r" % token)
            return "?"
        return hit


def to_sound_classes(tokens, table=None, *, strict=True):
    """One class label per token; table defaults to the bundled Dolgo set."""
    if table is None:
        table = default_sound_classes()
    return [table.label(tok, strict=strict) for tok in tokens]


def load_sound_classes(path):
    entries = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["symbol", "class"]:
            raise ParseError("expected header symbol,class", path=str(path))
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError("expected 2 fields", path=str(path),
                                 line=lineno)
            symbol = unicodedata.normalize("NFC", row[0])
            if symbol in entries:
                raise ParseError("duplicate symbol %r" % symbol,
                                 path=str(path), line=lineno)
            entries[symbol] = row[1]
    return SoundClassTable(entries)


@lru_cache(maxsize=1)
def default_sound_classes():
    path = resources.files("cogforge").joinpath("data/dolgo.csv")
    with resources.as_file(path) as real:
        return load_sound_classes(real)
