"""Extract targeted predictions from raw model responses.

MCQ extraction tries, in order: a standalone leading letter, an
"answer is X"-style phrase, then a unique option-text match; anything else is
Unparseable (scored incorrect downstream). Free-form extraction strips
template-echo prefixes, truncates chat/template echoes, and collapses
pathological verbatim repetition. The bundled fixture corpus is the
behavioral contract for both.
"""

import re
from dataclasses import dataclass
from enum import Enum

_LETTERS = "ABCD"
_WS = re.compile(r"\s+")

# Leading-letter forms: "B", "B.", "B:", "(B)", "B)" at the response start.
_LEADING_PAREN = re.compile(r"^\s*\(([A-Da-d])\)")
_LEADING_PUNCT = re.compile(r"^\s*([A-Da-d])[.:)](?:\s|$)")
_BARE_LETTER = re.compile(r"^\s*([A-Da-d])\s*\.?\s*$")

# "answer is B", "correct answer is (B)", "answer is option B", "answer: B".
_ANSWER_PHRASE = re.compile(
    r"answer\s*(?:is|:)\s*(?:option\s+)?\(?([A-Da-d])\)?(?=[\s.,:;!?)]|$)",
    re.IGNORECASE,
)


class ExtractionMethod(str, Enum):
    LETTER_PATTERN = "letter_pattern"
    OPTION_TEXT_MATCH = "option_text_match"
    FIRST_LINE = "first_line"
    FULL_TEXT = "full_text"
    UNPARSEABLE = "unparseable"


@dataclass(frozen=True)
class ExtractedAnswer:
    kind: str
    value: str
    method: ExtractionMethod
    confidence_note: str = ""

    @property
    def parseable(self) -> bool:
        return self.method is not ExtractionMethod.UNPARSEABLE


def _norm(text: str) -> str:
    return _WS.sub(" ", text).strip().lower()


def _coerce_options(options) -> dict[str, str]:
    if isinstance(options, dict):
        mapping = {str(k).upper(): str(v) for k, v in options.items()}
    else:
        seq = list(options)
        if len(seq) != 4:
            raise ValueError(f"expected 4 options, got {len(seq)}")
        mapping = dict(zip(_LETTERS, (str(v) for v in seq)))
    if sorted(mapping) != list(_LETTERS):
        raise ValueError(f"options must be labeled A-D, got {sorted(mapping)}")
    return mapping


def extract_mcq(raw: str, options, kind: str = "mcq") -> ExtractedAnswer:
    """Pick the predicted option letter out of a free-form MCQ response."""
    mapping = _coerce_options(options)
    text = raw or ""

    for pattern in (_LEADING_PAREN, _LEADING_PUNCT, _BARE_LETTER):
        m = pattern.match(text)
        if m:
            return ExtractedAnswer(kind, m.group(1).upper(), ExtractionMethod.LETTER_PATTERN,
                                   "leading letter")

    m = _ANSWER_PHRASE.search(text)
    if m:
        return ExtractedAnswer(kind, m.group(1).upper(), ExtractionMethod.LETTER_PATTERN,
                               "answer phrase")

    norm_text = _norm(text)
    # "B. <option B text>" mid-response: letter immediately restating its option.
    for letter, opt in mapping.items():
        opt_norm = _norm(opt)
        if opt_norm and f"{letter.lower()}. {opt_norm}" in norm_text:
            return ExtractedAnswer(kind, letter, ExtractionMethod.LETTER_PATTERN,
                                   "letter followed by option text")

    hits = [letter for letter, opt in mapping.items() if _norm(opt) and _norm(opt) in norm_text]
    if len(hits) == 1:
        return ExtractedAnswer(kind, hits[0], ExtractionMethod.OPTION_TEXT_MATCH,
                               "unique option text")

    note = "no pattern matched" if not hits else f"ambiguous option texts: {hits}"
    return ExtractedAnswer(kind, "", ExtractionMethod.UNPARSEABLE, note)


_ECHO_PREFIXES = ("output:", "answer:", "input:")
# Markers that signal the model started echoing the template or a chat turn.
_ECHO_MARKERS = ("Question:", "Input:", "Output:", "Answer:", "Task:",
                 "Human:", "Assistant:", "###")


def _strip_prefixes(text: str) -> str:
    changed = True
    while changed:
        changed = False
        lowered = text.lower()
        for prefix in _ECHO_PREFIXES:
            if lowered.startswith(prefix):
                text = text[len(prefix):].lstrip()
                changed = True
                break
    return text


def _truncate_at_echo(text: str) -> str:
    best = len(text)
    for marker in _ECHO_MARKERS:
        idx = text.find(marker)
        # Only truncate when real content precedes the marker.
        if idx > 0 and text[:idx].strip():
            best = min(best, idx)
    return text[:best].rstrip()


def _collapse_repeats(text: str, threshold: int = 3) -> str:
    parts = re.split(r"(\n+)", text)
    paragraphs = parts[0::2]
    keep = [True] * len(paragraphs)
    i = 0
    while i < len(paragraphs):
        j = i
        while j < len(paragraphs) and paragraphs[j] == paragraphs[i]:
            j += 1
        if j - i >= threshold and paragraphs[i].strip():
            for k in range(i + 1, j):
                keep[k] = False
        i = j
    if all(keep):
        return text
    kept = [p for p, k in zip(paragraphs, keep) if k]
    return "\n".join(kept)


def extract_freeform(raw: str, kind) -> ExtractedAnswer:
    """Clean a free-form response down to its intended answer text.

    Never returns empty text unless the raw response itself was empty.
    """
    kind_value = kind.value if hasattr(kind, "value") else str(kind)
    original = (raw or "").strip()
    text = _strip_prefixes(original)
    text = _truncate_at_echo(text)
    text = _collapse_repeats(text).strip()
    if not text:
        text = original
    method = ExtractionMethod.FULL_TEXT if text == original else ExtractionMethod.FIRST_LINE
    return ExtractedAnswer(kind_value, text, method)
