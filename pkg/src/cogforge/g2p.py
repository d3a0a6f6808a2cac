"""Table-driven grapheme-to-phoneme conversion.

A ruleset is an ordered orthography map plus optional pre/post rewrite
rules. Transcription lowercases and NFC-normalizes the word, applies the
pre rules, scans left to right taking the longest matching map key at each
position, then applies the post rules. A backoff wrapper picks the best
ruleset for mixed-script input by unmapped-character count.
"""

import csv
import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError, ParseError

UNKNOWN_POLICIES = ("strict", "pass", "drop")


@dataclass(frozen=True)
class RewriteRule:
    """Contextual rewrite `src -> dst / left _ right`; `#` anchors a word edge."""

    src: str
    dst: str
    left: str = ""
    right: str = ""

    def apply(self, text):
        out = []
        i = 0
        while i < len(text):
            if text.startswith(self.src, i) and self._context_ok(text, i):
                out.append(self.dst)
                i += len(self.src)
            else:
                out.append(text[i])
                i += 1
        return "".join(out)

    def _context_ok(self, text, i):
        end = i + len(self.src)
        left, right = self.left, self.right
        if left.startswith("#"):
            literal = left[1:]
            if i != len(literal) or not text.startswith(literal):
                return False
        elif left and (i < len(left) or text[i - len(left):i] != left):
            return False
        if right.endswith("#"):
            literal = right[:-1]
            if end + len(literal) != len(text) or not text.startswith(literal, end):
                return False
        elif right and not text.startswith(right, end):
            return False
        return True


@dataclass(frozen=True)
class G2PRuleset:
    """Compiled orthography map; `mapping` is ordered longest key first."""

    mapping: tuple
    pre_rules: tuple = ()
    post_rules: tuple = ()
    lang: object = None
    name: str = ""

    def __post_init__(self):
        keys = [orth for orth, _ in self.mapping]
        if any(not k for k in keys):
            raise DataError("empty grapheme key in map")
        if len(set(keys)) != len(keys):
            raise DataError("duplicate grapheme keys in map")
        object.__setattr__(self, "_table", dict(self.mapping))
        object.__setattr__(self, "_max_key",
                           max((len(k) for k in keys), default=0))


@dataclass(frozen=True)
class Transcription:
    ipa: str
    unmapped: tuple = ()

    @property
    def covered(self):
        return not self.unmapped


def transcribe(ruleset, word, *, unknown="pass"):
    return transcribe_detail(ruleset, word, unknown=unknown).ipa


def transcribe_detail(ruleset, word, *, unknown="pass"):
    """Transcribe one word, reporting which characters the map missed.

    unknown: strict raises on an unmapped character, pass copies it to the
    output, drop removes it; pass and drop both record it.
    """
    if unknown not in UNKNOWN_POLICIES:
        raise DataError(f"unknown-policy must be one of {UNKNOWN_POLICIES}")
    text = unicodedata.normalize("NFC", word).lower()
    for rule in ruleset.pre_rules:
        text = rule.apply(text)
    table = ruleset._table
    out = []
    missed = []
    i = 0
    while i < len(text):
        for width in range(min(ruleset._max_key, len(text) - i), 0, -1):
            phon = table.get(text[i:i + width])
            if phon is not None:
                out.append(phon)
                i += width
                break
        else:
            ch = text[i]
            if unknown == "strict":
                raise DataError(f"no mapping for character {ch!r} in {word!r}")
            if unknown == "pass":
                out.append(ch)
            missed.append(ch)
            i += 1
    result = "".join(out)
    for rule in ruleset.post_rules:
        result = rule.apply(result)
    return Transcription(ipa=result, unmapped=tuple(missed))


def backoff_transcribe(rulesets, word, *, unknown="pass"):
    return backoff_detail(rulesets, word, unknown=unknown).ipa


def backoff_detail(rulesets, word, *, unknown="pass"):
    """Try rulesets in order; first full cover wins, else fewest misses."""
    if not rulesets:
        raise DataError("backoff needs at least one ruleset")
    best = None
    for ruleset in rulesets:
        cand = transcribe_detail(ruleset, word, unknown=unknown)
        if cand.covered:
            return cand
        if best is None or len(cand.unmapped) < len(best.unmapped):
            best = cand
    return best


def parse_rule(line):
    """Parse `src -> dst / left _ right`; the context part is optional."""
    body, sep, context = line.partition("/")
    src, arrow, dst = body.partition("->")
    if not arrow:
        raise ParseError(f"rewrite rule needs '->': {line!r}")
    src = src.strip()
    dst = dst.strip()
    if not src:
        raise ParseError(f"rewrite rule with empty source: {line!r}")
    left = right = ""
    if sep:
        left, underscore, right = context.partition("_")
        if not underscore:
            raise ParseError(f"rule context needs '_': {line!r}")
        left = left.strip()
        right = right.strip()
    return RewriteRule(src=src, dst=dst, left=left, right=right)


def _load_rules(path):
    rules = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            try:
                rules.append(parse_rule(line))
            except ParseError as exc:
                raise ParseError(str(exc).split(" (")[0], path=str(path),
                                 line=lineno) from None
    return tuple(rules)


def compile_ruleset(map_path, pre_path=None, post_path=None, *, lang=None,
                    name=""):
    """Load an `orth,phon` CSV and optional rewrite-rule files."""
    entries = []
    seen = set()
    with open(map_path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["orth", "phon"]:
            raise ParseError("expected header orth,phon", path=str(map_path))
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError("expected 2 fields", path=str(map_path),
                                 line=lineno)
            orth = unicodedata.normalize("NFC", row[0]).lower()
            phon = unicodedata.normalize("NFC", row[1])
            if not orth:
                raise ParseError("empty grapheme key", path=str(map_path),
                                 line=lineno)
            if orth in seen:
                raise ParseError(f"duplicate grapheme key {orth!r}",
                                 path=str(map_path), line=lineno)
            seen.add(orth)
            entries.append((orth, phon))
    entries.sort(key=lambda kv: (-len(kv[0]), kv[0]))
    pre = _load_rules(pre_path) if pre_path else ()
    post = _load_rules(post_path) if post_path else ()
    return G2PRuleset(mapping=tuple(entries), pre_rules=pre, post_rules=post,
                      lang=lang, name=name or Path(map_path).stem)


def load_g2p_dir(dirpath):
    """Collect rulesets from a directory.

    Layout: `<key>.csv` per language, with optional `<key>.pre.txt` and
    `<key>.post.txt` rewrite files; `<key>.1.csv`, `<key>.2.csv`, ... add
    backoff alternatives in numeric order after the base file. Returns
    {key: [rulesets]}.
    """
    root = Path(dirpath)
    if not root.is_dir():
        raise DataError(f"not a G2P rule directory: {dirpath}")
    grouped = {}
    for path in sorted(root.glob("*.csv")):
        parts = path.stem.split(".")
        key = parts[0]
        rank = int(parts[1]) if len(parts) > 1 and parts[1].isdigit() else 0
        pre = root / f"{path.stem}.pre.txt"
        post = root / f"{path.stem}.post.txt"
        ruleset = compile_ruleset(
            path,
            pre_path=pre if pre.exists() else None,
            post_path=post if post.exists() else None,
            name=path.stem,
        )
        grouped.setdefault(key, []).append((rank, ruleset))
    return {key: [rs for _, rs in sorted(pairs, key=lambda p: p[0])]
            for key, pairs in grouped.items()}
