"""Corpus ingestion: the three record sources validated into uniform Documents.

Input records arrive as dicts (one JSONL line each) with the documented field
names: id, kind, title, body, journal, question, answer, options, cloze_spans,
source_ref. Ingestion never emits a Document violating its invariants; bad
records are skipped or rejected with a diagnostic, and
emitted + skipped + rejected == input for every ingest call.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

from .storage import canonical_json, read_jsonl, sha256_text, atomic_write_text
from .textproc import canonical_name, normalize_whitespace

log = logging.getLogger(__name__)

# The fourteen journals used for abstract filtering.
DEFAULT_JOURNAL_WHITELIST = (
    "Acta Ophthalmologica",
    "American Journal of Ophthalmology",
    "Asia-Pacific Journal of Ophthalmology",
    "British Journal of Ophthalmology",
    "Canadian Journal of Ophthalmology",
    "Eye",
    "Graefe's Archive for Clinical and Experimental Ophthalmology",
    "Investigative Ophthalmology and Visual Science",
    "JAMA Ophthalmology",
    "Journal of Cataract and Refractive Surgery",
    "Ophthalmology",
    "Ophthalmology Glaucoma",
    "Retina",
    "Survey of Ophthalmology",
)


class DocumentKind(str, Enum):
    CASE_REPORT = "case_report"
    ABSTRACT = "abstract"
    STUDY_ITEM = "study_item"


class DuplicateDocumentId(ValueError):
    """Two records in one stream share an id; corpus integrity is broken."""


class StoreCorrupt(ValueError):
    """A corpus store file failed its integrity check on load."""


@dataclass(frozen=True)
class StudyItem:
    """Question payload for study-material documents.

    cloze_spans are (start, end) character ranges into question_text, sorted,
    non-overlapping and in bounds. When options are present the answer must
    equal exactly one option text.
    """

    question_text: str
    answer: str
    options: tuple[str, ...] = ()
    cloze_spans: tuple[tuple[int, int], ...] = ()

    def validate(self) -> None:
        if not self.question_text.strip():
            raise ValueError("empty question text")
        if not self.answer.strip():
            raise ValueError("empty answer")
        if len(self.options) > 4:
            raise ValueError(f"{len(self.options)} options; at most 4 allowed")
        prev_end = 0
        for start, end in self.cloze_spans:
            if not (0 <= start < end <= len(self.question_text)):
                raise ValueError(f"cloze span ({start}, {end}) out of bounds")
            if start < prev_end:
                raise ValueError(f"cloze span ({start}, {end}) overlaps or is unsorted")
            prev_end = end
        if self.options:
            matches = [o for o in self.options if o == self.answer]
            if len(matches) != 1:
                raise ValueError("answer must equal exactly one option text")


@dataclass(frozen=True)
class Document:
    """One corpus record: case report, journal abstract, or study item."""

    id: str
    kind: DocumentKind
    body: str
    title: str = ""
    journal: str = ""
    source_ref: str = ""
    metadata: tuple[tuple[str, str], ...] = ()
    study: StudyItem | None = None

    def to_record(self) -> dict:
        rec = {
            "id": self.id,
            "kind": self.kind.value,
            "title": self.title,
            "body": self.body,
            "journal": self.journal,
            "source_ref": self.source_ref,
            "metadata": dict(self.metadata),
        }
        if self.study is not None:
            rec["question"] = self.study.question_text
            rec["answer"] = self.study.answer
            rec["options"] = list(self.study.options)
            rec["cloze_spans"] = [list(s) for s in self.study.cloze_spans]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Document":
        study = None
        if rec.get("kind") == DocumentKind.STUDY_ITEM.value:
            study = StudyItem(
                question_text=rec["question"],
                answer=rec["answer"],
                options=tuple(rec.get("options") or ()),
                cloze_spans=tuple(tuple(s) for s in (rec.get("cloze_spans") or ())),
            )
        return cls(
            id=rec["id"],
            kind=DocumentKind(rec["kind"]),
            body=rec["body"],
            title=rec.get("title", ""),
            journal=rec.get("journal", ""),
            source_ref=rec.get("source_ref", ""),
            metadata=tuple(sorted((rec.get("metadata") or {}).items())),
            study=study,
        )


@dataclass
class IngestResult:
    """Documents plus the bookkeeping the counting invariant needs."""

    documents: list[Document] = field(default_factory=list)
    skipped: int = 0
    rejected: int = 0
    errors: int = 0
    diagnostics: list[str] = field(default_factory=list)

    def _skip(self, reason: str, malformed: bool = False) -> None:
        self.skipped += 1
        if malformed:
            self.errors += 1
        self.diagnostics.append(reason)
        log.warning("skipped record: %s", reason)

    def _reject(self, reason: str) -> None:
        self.rejected += 1
        self.diagnostics.append(reason)
        log.warning("rejected record: %s", reason)


def _check_duplicate(seen: set, doc_id: str) -> None:
    if doc_id in seen:
        raise DuplicateDocumentId(f"duplicate document id: {doc_id!r}")
    seen.add(doc_id)


def ingest_abstracts(records, journal_whitelist=DEFAULT_JOURNAL_WHITELIST) -> IngestResult:
    """Filter abstract records to the whitelisted journals.

    Journal matching is exact after lowercasing and whitespace collapse.
    Non-matching records and malformed records (missing body/id) are skipped;
    a duplicate id is a hard error.
    """
    wanted = {canonical_name(j) for j in journal_whitelist}
    result = IngestResult()
    seen: set[str] = set()
    for i, rec in enumerate(records):
        doc_id = str(rec.get("id") or "")
        if not doc_id:
            result._skip(f"record {i}: missing id", malformed=True)
            continue
        _check_duplicate(seen, doc_id)
        body = normalize_whitespace(str(rec.get("body") or ""))
        if not body:
            result._skip(f"record {doc_id}: missing body", malformed=True)
            continue
        journal = normalize_whitespace(str(rec.get("journal") or ""))
        if canonical_name(journal) not in wanted:
            result._skip(f"record {doc_id}: journal {journal!r} not whitelisted")
            continue
        result.documents.append(Document(
            id=doc_id,
            kind=DocumentKind.ABSTRACT,
            body=body,
            title=normalize_whitespace(str(rec.get("title") or "")),
            journal=journal,
            source_ref=str(rec.get("source_ref") or ""),
        ))
    return result


def ingest_case_reports(records) -> IngestResult:
    """Full-text case reports; same skip/duplicate semantics as abstracts."""
    result = IngestResult()
    seen: set[str] = set()
    for i, rec in enumerate(records):
        doc_id = str(rec.get("id") or "")
        if not doc_id:
            result._skip(f"record {i}: missing id", malformed=True)
            continue
        _check_duplicate(seen, doc_id)
        body = normalize_whitespace(str(rec.get("body") or ""))
        if not body:
            result._skip(f"record {doc_id}: missing body", malformed=True)
            continue
        result.documents.append(Document(
            id=doc_id,
            kind=DocumentKind.CASE_REPORT,
            body=body,
            title=normalize_whitespace(str(rec.get("title") or "")),
            source_ref=str(rec.get("source_ref") or ""),
        ))
    return result


def ingest_study_items(records) -> IngestResult:
    """Study questions with optional cloze spans and options.

    Records with overlapping/out-of-bounds spans, or whose answer is not among
    the options, are rejected (not skipped) with a diagnostic.
    """
    result = IngestResult()
    seen: set[str] = set()
    for i, rec in enumerate(records):
        doc_id = str(rec.get("id") or "")
        if not doc_id:
            result._skip(f"record {i}: missing id", malformed=True)
            continue
        _check_duplicate(seen, doc_id)
        question = str(rec.get("question") or rec.get("body") or "")
        answer = str(rec.get("answer") or "")
        if not question.strip() or not answer.strip():
            result._skip(f"record {doc_id}: missing question or answer", malformed=True)
            continue
        item = StudyItem(
            question_text=question,
            answer=answer,
            options=tuple(str(o) for o in (rec.get("options") or ())),
            cloze_spans=tuple(tuple(int(x) for x in s) for s in (rec.get("cloze_spans") or ())),
        )
        try:
            item.validate()
        except ValueError as exc:
            result._reject(f"record {doc_id}: {exc}")
            continue
        result.documents.append(Document(
            id=doc_id,
            kind=DocumentKind.STUDY_ITEM,
            body=normalize_whitespace(question),
            title=normalize_whitespace(str(rec.get("title") or "")),
            source_ref=str(rec.get("source_ref") or ""),
            study=item,
        ))
    return result


STORE_SCHEMA = "eyebench-corpus/1"


def save_store(path, documents) -> None:
    """Write a validated store: integrity header line + one document per line."""
    lines = [canonical_json(d.to_record()) for d in documents]
    body = "".join(line + "\n" for line in lines)
    header = canonical_json({
        "schema": STORE_SCHEMA,
        "count": len(lines),
        "digest": sha256_text(body),
    })
    atomic_write_text(path, header + "\n" + body)


def load_store(path) -> list[Document]:
    """Load a store, verifying header count and digest."""
    with open(path, encoding="utf-8") as f:
        content = f.read()
    first_nl = content.find("\n")
    if first_nl < 0:
        raise StoreCorrupt(f"{path}: empty store file")
    import json as _json

    header = _json.loads(content[:first_nl])
    body = content[first_nl + 1:]
    if header.get("schema") != STORE_SCHEMA:
        raise StoreCorrupt(f"{path}: unexpected schema {header.get('schema')!r}")
    if header.get("digest") != sha256_text(body):
        raise StoreCorrupt(f"{path}: content digest mismatch")
    records = [_json.loads(line) for line in body.splitlines() if line.strip()]
    if len(records) != header.get("count"):
        raise StoreCorrupt(f"{path}: count mismatch")
    docs = [Document.from_record(r) for r in records]
    seen: set[str] = set()
    for d in docs:
        _check_duplicate(seen, d.id)
    return docs
