"""Shared text cleanup: whitespace canonicalization and sentence splitting."""

import re

_TRAILING_WS = re.compile(r"[ \t]+$", re.MULTILINE)
_BLANK_RUNS = re.compile(r"\n{3,}")
_WS_RUNS = re.compile(r"\s+")

# Abbreviations that end with a period but do not end a sentence.
SENTENCE_ABBREVIATIONS = (
    "vs.", "et al.", "Dr.", "Mr.", "Mrs.", "Ms.", "Fig.", "Figs.",
    "e.g.", "i.e.", "No.", "ca.", "approx.", "St.",
)


def normalize_whitespace(text: str) -> str:
    """CRLF -> LF, strip trailing spaces, collapse blank-line runs to one."""
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    text = _TRAILING_WS.sub("", text)
    text = _BLANK_RUNS.sub("\n\n", text)
    return text.strip()


def canonical_name(text: str) -> str:
    """Lowercase and collapse whitespace; used for journal-name matching."""
    return _WS_RUNS.sub(" ", text).strip().lower()


def split_sentences(text: str, abbreviations=SENTENCE_ABBREVIATIONS) -> list[str]:
    """Split on '.', '!' or '?' followed by whitespace and an uppercase/digit.

    A candidate boundary is suppressed when the text up to the punctuation
    ends with a known abbreviation ("vs.", "et al.", ...).
    """
    sentences = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] in ".!?":
            j = i + 1
            k = j
            while k < n and text[k] in " \t\n":
                k += 1
            if k > j and k < n and (text[k].isupper() or text[k].isdigit()):
                head = text[start:j]
                if not any(head.endswith(a) for a in abbreviations):
                    sentence = head.strip()
                    if sentence:
                        sentences.append(sentence)
                    start = k
                    i = k
                    continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences
