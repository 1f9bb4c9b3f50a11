"""Automatic metrics: Rouge-L over token LCS, MCQ accuracy and Macro-F1, and
the client side of the external neural-scorer protocol."""

import re
from dataclasses import dataclass

import requests

from .extraction import ExtractedAnswer, ExtractionMethod

# Lowercased alphanumeric runs; punctuation delimits, underscores too.
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)

MCQ_LABELS = ("A", "B", "C", "D")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def lcs_length(a, b) -> int:
    """Longest common subsequence length, O(len(a) * len(b)) with two rows."""
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f: float


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Sentence-level Rouge-L with F1 (beta = 1); empty side scores zero."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    if precision + recall == 0:
        return RougeScore(0.0, 0.0, 0.0)
    f = 2 * precision * recall / (precision + recall)
    return RougeScore(precision, recall, f)


@dataclass(frozen=True)
class ClassStats:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ClassificationScore:
    accuracy: float
    macro_f1: float
    per_class: dict[str, ClassStats]
    n_unparseable: int


class LengthMismatch(ValueError):
    pass


def _predicted_letter(prediction) -> str | None:
    """Accepts ExtractedAnswer or a bare letter; None when unparseable."""
    if isinstance(prediction, ExtractedAnswer):
        if prediction.method is ExtractionMethod.UNPARSEABLE:
            return None
        value = prediction.value
    else:
        value = prediction
    value = (value or "").strip().upper()
    return value if value in MCQ_LABELS else None


def classify_scores(predictions, golds) -> ClassificationScore:
    """Accuracy and Macro-F1 over the fixed label set {A, B, C, D}.

    Unparseable predictions count as incorrect and predict no class; their
    gold class still counts toward that class's recall denominator.
    """
    predictions = list(predictions)
    golds = [str(g).strip().upper() for g in golds]
    if len(predictions) != len(golds):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(golds)} golds")
    for g in golds:
        if g not in MCQ_LABELS:
            raise ValueError(f"gold label {g!r} outside {MCQ_LABELS}")

    letters = [_predicted_letter(p) for p in predictions]
    n = len(golds)
    correct = sum(1 for p, g in zip(letters, golds) if p == g)
    per_class = {}
    f1_sum = 0.0
    for label in MCQ_LABELS:
        tp = sum(1 for p, g in zip(letters, golds) if p == label and g == label)
        fp = sum(1 for p, g in zip(letters, golds) if p == label and g != label)
        fn = sum(1 for p, g in zip(letters, golds) if p != label and g == label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = ClassStats(precision, recall, f1)
        f1_sum += f1
    return ClassificationScore(
        accuracy=correct / n if n else 0.0,
        macro_f1=f1_sum / len(MCQ_LABELS),
        per_class=per_class,
        n_unparseable=sum(1 for p in letters if p is None),
    )


@dataclass(frozen=True)
class NeuralScores:
    bert_score: float
    bart_score: float


class ScorerUnavailable(RuntimeError):
    """The scorer sidecar could not produce scores; metric is reported absent."""


SCORER_BATCH_LIMIT = 64


def score_neural(pairs, scorer_endpoint: str, *, timeout: float = 60.0,
                 post=requests.post) -> list[NeuralScores]:
    """Score (candidate, reference) pairs via the sidecar's POST /score.

    The wire body is a JSON list of {candidate, reference}; the response a
    JSON list of {bert_score, bart_score}, aligned. Batches are capped at 64
    pairs. Any transport or protocol failure raises ScorerUnavailable;
    scores are never fabricated.
    """
    pairs = list(pairs)
    out: list[NeuralScores] = []
    url = scorer_endpoint.rstrip("/") + "/score"
    for start in range(0, len(pairs), SCORER_BATCH_LIMIT):
        chunk = pairs[start:start + SCORER_BATCH_LIMIT]
        body = [{"candidate": c, "reference": r} for c, r in chunk]
        try:
            resp = post(url, json=body, timeout=timeout)
        except requests.RequestException as exc:
            raise ScorerUnavailable(f"scorer unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ScorerUnavailable(f"scorer returned {resp.status_code}")
        try:
            scored = resp.json()
            if len(scored) != len(chunk):
                raise ValueError(f"got {len(scored)} scores for {len(chunk)} pairs")
            for entry in scored:
                bart = float(entry["bart_score"])
                if bart > 0:
                    raise ValueError("bart_score must be non-positive")
                out.append(NeuralScores(float(entry["bert_score"]), bart))
        except (ValueError, KeyError, TypeError) as exc:
            raise ScorerUnavailable(f"scorer protocol violation: {exc}") from exc
    return out
