"""Deterministic text-pair scorers.

The builtin checkpoint is fully lexical, so the service runs anywhere with no
model downloads: similarity is cosine over hashed word- and character-n-gram
counts (order-sensitive through the n-grams, 1.0 for identical strings), and
the likelihood score is a smoothed bigram log-likelihood of the candidate
under a language model estimated from the reference (always non-positive;
closer match, less negative).
"""

import math
import re
from collections import Counter

_WORD = re.compile(r"[^\W_]+", re.UNICODE)

# Score assigned when the candidate has no tokens at all.
EMPTY_CANDIDATE_LOGLIK = -30.0

BUILTIN_CHECKPOINT = "builtin-lexical"


class UnknownCheckpoint(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def _features(text: str) -> Counter:
    tokens = tokenize(text)
    feats: Counter = Counter()
    for t in tokens:
        feats["w1:" + t] += 1
    for a, b in zip(tokens, tokens[1:]):
        feats["w2:" + a + " " + b] += 1
    squashed = " ".join(tokens)
    padded = f"^{squashed}$"
    for i in range(len(padded) - 2):
        feats["c3:" + padded[i:i + 3]] += 1
    return feats


def similarity(candidate: str, reference: str) -> float:
    """Cosine over n-gram counts, in [0, 1]; 1.0 iff the token streams match."""
    fc, fr = _features(candidate), _features(reference)
    if fc == fr:
        return 1.0
    if not fc or not fr:
        return 0.0
    dot = sum(v * fr[k] for k, v in fc.items() if k in fr)
    norm = math.sqrt(sum(v * v for v in fc.values())) * \
        math.sqrt(sum(v * v for v in fr.values()))
    return min(1.0, dot / norm) if norm else 0.0


def log_likelihood(candidate: str, reference: str, k: float = 0.1) -> float:
    """Mean add-k-smoothed bigram log-probability of the candidate under the
    reference; non-positive by construction."""
    cand = tokenize(candidate)
    if not cand:
        return EMPTY_CANDIDATE_LOGLIK
    ref = tokenize(reference)
    vocab = set(ref) | set(cand) | {"<s>"}
    v = len(vocab) + 1  # one slot for unseen
    bigrams = Counter(zip(["<s>"] + ref, ref))
    context = Counter(["<s>"] + ref[:-1]) if ref else Counter()
    total = 0.0
    prev = "<s>"
    for tok in cand:
        p = (bigrams[(prev, tok)] + k) / (context[prev] + k * v)
        total += math.log(p)
        prev = tok
    return min(0.0, total / len(cand))


class PairScorer:
    """Scorer behind the wire protocol; `checkpoint` selects the backend."""

    def __init__(self, checkpoint: str = BUILTIN_CHECKPOINT):
        if checkpoint != BUILTIN_CHECKPOINT:
            raise UnknownCheckpoint(
                f"unknown checkpoint {checkpoint!r}; available: {BUILTIN_CHECKPOINT}")
        self.checkpoint = checkpoint

    def score_pair(self, candidate: str, reference: str) -> dict:
        return {
            "bert_score": similarity(candidate, reference),
            "bart_score": log_likelihood(candidate, reference),
        }

    def score_batch(self, pairs) -> list[dict]:
        return [self.score_pair(p["candidate"], p["reference"]) for p in pairs]
