"""Blinded two-rater evaluation: sessions with per-sample randomized model
order, blinded item serving, rating collection, and rater-averaged
aggregation. Ratings are integers 1-5 on correctness, completeness, and
readability; storage is an append-only record log next to a session snapshot,
so no rating is ever destructively edited."""

import json
import random
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .storage import atomic_write_text, canonical_json

RUBRIC_VERSION = "clinical-rubric/1"

DIMENSIONS = ("correctness", "completeness", "readability")

# Rating guidance shown to raters, one anchor line per score.
RATING_RUBRIC = {
    "version": RUBRIC_VERSION,
    "scale_note": "Rating ranges from 1 (bad) 2,3,4 to 5 (good)",
    "dimensions": {
        "correctness": {
            "question": "Does the summary contain correct information from the original article?",
            "anchors": {
                "1": "1 (bad): The summary includes false or misleading information that is significantly different from the original article.",
                "2": "2: Some elements of the summary contain correct information however the overall summary is inaccurate.",
                "3": "3: The main point of the summary is correct, however it may include some inaccurate information from the original article.",
                "4": "4: The summary mostly avoids inaccuracies, but may include minor inaccurate information from the original article.",
                "5": "5 (good): The summary is accurate based on the original article.",
            },
            "annotation_note": "Additional annotations: if the response contains false or misleading information, please identify them.",
        },
        "completeness": {
            "question": "Does the summary capture the key information from the original article?",
            "anchors": {
                "1": "1 (bad): The summary is incomplete (missing key information), or leaves out crucial details.",
                "2": "2: The summary is somewhat complete, but it lacks key information that impact its comprehensiveness.",
                "3": "3: The summary is moderately complete, but certain details are missing, requiring enhancement.",
                "4": "4: The summary is largely comprehensive, but a few minor details could be refined for better alignment with the original article.",
                "5": "5 (good): The summary text is comprehensive and includes all relevant information.",
            },
        },
        "readability": {
            "question": "Is the summary easy to read?",
            "anchors": {
                "1": "1 (bad): The text is highly difficult to read, full of grammatical errors, and lacks coherence and clarity.",
                "2": "2: The text is somewhat difficult to read, and there are occasional grammatical errors. The coherence and clarity could be improved.",
                "3": "3: The text is moderately easy to read, but there are noticeable grammatical errors and some parts lack coherence and clarity.",
                "4": "4: The text is fairly easy to read, with only a few minor grammatical errors. Overall coherence and clarity are good, but there is room for improvement.",
                "5": "5 (good): The text is easy to read, well-structured, and flows naturally.",
            },
        },
    },
}


class HumanEvalError(ValueError):
    pass


class DuplicateSampleIds(HumanEvalError):
    pass


class UnknownRater(HumanEvalError):
    pass


class UnknownSlot(HumanEvalError):
    pass


class OutOfRange(HumanEvalError):
    pass


class AlreadyRated(HumanEvalError):
    pass


@dataclass(frozen=True)
class EvalSample:
    sample_id: str
    text: str
    responses: dict  # model id -> response text
    source_note_ref: str = ""


@dataclass(frozen=True)
class RatingRecord:
    session_id: str
    rater_id: str
    sample_id: str
    display_slot: int  # 1-based slot as shown to the rater
    correctness: int
    completeness: int
    readability: int
    note: str = ""
    rubric_version: str = RUBRIC_VERSION
    timestamp: float = 0.0

    def scores(self) -> dict[str, int]:
        return {"correctness": self.correctness, "completeness": self.completeness,
                "readability": self.readability}

    def to_record(self) -> dict:
        return {
            "session_id": self.session_id,
            "rater_id": self.rater_id,
            "sample_id": self.sample_id,
            "display_slot": self.display_slot,
            "correctness": self.correctness,
            "completeness": self.completeness,
            "readability": self.readability,
            "note": self.note,
            "rubric_version": self.rubric_version,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "RatingRecord":
        return cls(**{k: rec[k] for k in (
            "session_id", "rater_id", "sample_id", "display_slot", "correctness",
            "completeness", "readability")},
            note=rec.get("note", ""),
            rubric_version=rec.get("rubric_version", RUBRIC_VERSION),
            timestamp=rec.get("timestamp", 0.0))


@dataclass(frozen=True)
class BlindedItem:
    """What a rater sees: sample text plus responses labeled only by slot."""

    sample_id: str
    sample_index: int
    n_samples: int
    text: str
    responses: tuple[str, ...]  # slot order; index 0 is "Response 1"
    pending_slots: tuple[int, ...]

    def to_payload(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "sample_index": self.sample_index,
            "n_samples": self.n_samples,
            "text": self.text,
            "responses": [
                {"slot": i + 1, "label": f"Response {i + 1}", "text": r}
                for i, r in enumerate(self.responses)
            ],
            "pending_slots": list(self.pending_slots),
        }


@dataclass
class EvalSession:
    id: str
    samples: list[EvalSample]
    models: list[str]
    raters: list[str]
    seed: int
    # sample_id -> tuple of model ids, position = display slot - 1
    assignment: dict = field(default_factory=dict)
    ratings: list[RatingRecord] = field(default_factory=list)

    def sample_by_id(self, sample_id: str) -> EvalSample:
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        raise UnknownSlot(f"unknown sample {sample_id!r}")

    def rated_slots(self, rater_id: str) -> set:
        return {(r.sample_id, r.display_slot) for r in self.ratings if r.rater_id == rater_id}

    def is_complete(self) -> bool:
        need = len(self.samples) * len(self.models) * len(self.raters)
        return len(self.ratings) >= need

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "seed": self.seed,
            "models": self.models,
            "raters": self.raters,
            "assignment": {k: list(v) for k, v in self.assignment.items()},
            "samples": [
                {"sample_id": s.sample_id, "text": s.text,
                 "responses": s.responses, "source_note_ref": s.source_note_ref}
                for s in self.samples
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EvalSession":
        return cls(
            id=rec["id"],
            samples=[EvalSample(sample_id=s["sample_id"], text=s["text"],
                                responses=s["responses"],
                                source_note_ref=s.get("source_note_ref", ""))
                     for s in rec["samples"]],
            models=list(rec["models"]),
            raters=list(rec["raters"]),
            seed=rec["seed"],
            assignment={k: tuple(v) for k, v in rec["assignment"].items()},
        )


def create_session(samples, models, raters, seed: int, session_id: str = "session") -> EvalSession:
    """Build a session with a deterministic per-sample model permutation."""
    samples = list(samples)
    models = list(models)
    raters = list(raters)
    if not samples:
        raise HumanEvalError("need at least one sample")
    if len(models) < 2:
        raise HumanEvalError("need at least two models")
    if not raters:
        raise HumanEvalError("need at least one rater")
    ids = [s.sample_id for s in samples]
    if len(set(ids)) != len(ids):
        raise DuplicateSampleIds("sample ids must be unique")
    for s in samples:
        missing = [m for m in models if m not in s.responses]
        if missing:
            raise HumanEvalError(f"sample {s.sample_id}: missing responses for {missing}")

    rng = random.Random(seed)
    assignment = {}
    for s in samples:
        order = models[:]
        rng.shuffle(order)
        assignment[s.sample_id] = tuple(order)
    return EvalSession(id=session_id, samples=samples, models=models,
                       raters=raters, seed=seed, assignment=assignment)


def next_item(session: EvalSession, rater_id: str) -> BlindedItem | None:
    """Lowest-indexed sample with a pending slot for this rater; None = done.

    The payload carries no model identities: responses appear in display-slot
    order under generic labels.
    """
    if rater_id not in session.raters:
        raise UnknownRater(rater_id)
    rated = session.rated_slots(rater_id)
    n_slots = len(session.models)
    for index, sample in enumerate(session.samples):
        pending = [slot for slot in range(1, n_slots + 1)
                   if (sample.sample_id, slot) not in rated]
        if pending:
            order = session.assignment[sample.sample_id]
            return BlindedItem(
                sample_id=sample.sample_id,
                sample_index=index + 1,
                n_samples=len(session.samples),
                text=sample.text,
                responses=tuple(sample.responses[model] for model in order),
                pending_slots=tuple(pending),
            )
    return None


def submit_rating(session: EvalSession, record: RatingRecord) -> RatingRecord:
    """Validate and append one rating; re-rating a slot is rejected."""
    if record.rater_id not in session.raters:
        raise UnknownRater(record.rater_id)
    sample = session.sample_by_id(record.sample_id)
    if not 1 <= record.display_slot <= len(session.models):
        raise UnknownSlot(f"slot {record.display_slot} outside 1..{len(session.models)}")
    for dim, value in record.scores().items():
        if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
            raise OutOfRange(f"{dim} must be an integer in 1..5, got {value!r}")
    if (record.sample_id, record.display_slot) in session.rated_slots(record.rater_id):
        raise AlreadyRated(f"{record.rater_id} already rated {record.sample_id} "
                           f"slot {record.display_slot}")
    if record.timestamp == 0.0:
        record = replace(record, timestamp=time.time())
    session.ratings.append(record)
    return record


@dataclass(frozen=True)
class AggregateReport:
    """Un-blinded means: per (model, dimension) over raters x samples, plus
    per-sample rater-averaged scores."""

    session_id: str
    models: tuple[str, ...]
    complete: bool
    n_ratings: int
    means: dict       # (model, dimension) -> float | None
    per_sample: dict  # (sample_id, model, dimension) -> float

    def to_payload(self) -> dict:
        table = {}
        for model in self.models:
            table[model] = {dim: self.means.get((model, dim)) for dim in DIMENSIONS}
        per_sample = {}
        for (sample_id, model, dim), value in sorted(self.per_sample.items()):
            per_sample.setdefault(sample_id, {}).setdefault(model, {})[dim] = value
        return {
            "session_id": self.session_id,
            "complete": self.complete,
            "n_ratings": self.n_ratings,
            "means": table,
            "per_sample": per_sample,
        }


def aggregate(session: EvalSession) -> AggregateReport:
    """Average ratings per model and dimension, un-blinding via the stored
    assignment. Incomplete sessions yield a report flagged incomplete."""
    cell_values: dict = {}
    sample_values: dict = {}
    for record in session.ratings:
        order = session.assignment[record.sample_id]
        model = order[record.display_slot - 1]
        for dim, value in record.scores().items():
            cell_values.setdefault((model, dim), []).append(value)
            sample_values.setdefault((record.sample_id, model, dim), []).append(value)
    means = {}
    for model in session.models:
        for dim in DIMENSIONS:
            values = cell_values.get((model, dim))
            means[(model, dim)] = sum(values) / len(values) if values else None
    per_sample = {key: sum(v) / len(v) for key, v in sample_values.items()}
    return AggregateReport(
        session_id=session.id,
        models=tuple(session.models),
        complete=session.is_complete(),
        n_ratings=len(session.ratings),
        means=means,
        per_sample=per_sample,
    )


class SessionStore:
    """Filesystem persistence: session.json snapshot + append-only ratings.jsonl."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def save(self, session: EvalSession) -> None:
        d = self._dir(session.id)
        d.mkdir(parents=True, exist_ok=True)
        atomic_write_text(d / "session.json", canonical_json(session.to_record()))
        log_path = d / "ratings.jsonl"
        if not log_path.exists():
            log_path.touch()

    def list_sessions(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir()
                      if (p / "session.json").exists())

    def load(self, session_id: str) -> EvalSession:
        d = self._dir(session_id)
        path = d / "session.json"
        if not path.exists():
            raise KeyError(f"no such session: {session_id!r}")
        with open(path, encoding="utf-8") as f:
            session = EvalSession.from_record(json.load(f))
        log_path = d / "ratings.jsonl"
        if log_path.exists():
            with open(log_path, encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if line:
                        session.ratings.append(RatingRecord.from_record(json.loads(line)))
        return session

    def append_rating(self, session: EvalSession, record: RatingRecord) -> RatingRecord:
        """Validate against the in-memory session, then append to the log."""
        with self._lock:
            record = submit_rating(session, record)
            log_path = self._dir(session.id) / "ratings.jsonl"
            with open(log_path, "a", encoding="utf-8") as f:
                f.write(canonical_json(record.to_record()) + "\n")
                f.flush()
        return record
