"""Instruction curation: build (task, instruction, input, output) tuples from
the corpus, weak-label case answers through an LLM client, and perform the
seeded 90/10 train/validation split."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .corpus import Document, DocumentKind
from .tasks import EvalTask, TaskKind
from .templates import assemble_prompt, render_template
from .textproc import split_sentences

BLANK_MARKER = "..."

PROVENANCE_GOLD = "gold"
WEAK_LABEL_PREFIX = "weak:"


class CurationError(ValueError):
    pass


class SingleSentenceAbstract(CurationError):
    """Abstract has no final sentence to withhold."""


class EmptyWeakLabel(CurationError):
    """The labeling backend returned an empty completion."""


class MissingClozeSpans(CurationError):
    pass


class WrongOptionCount(CurationError):
    pass


class BlankMarkerCollision(CurationError):
    """Question text already contains the blank marker outside its spans."""


def _task_from_value(value: str):
    try:
        return TaskKind(value)
    except ValueError:
        return EvalTask(value)


@dataclass(frozen=True)
class InstructionInstance:
    """One curated training/evaluation instance."""

    id: str
    task: TaskKind | EvalTask
    instruction: str
    input: str
    output: str
    source_doc: str
    provenance: str = PROVENANCE_GOLD

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "task": self.task.value,
            "instruction": self.instruction,
            "input": self.input,
            "output": self.output,
            "source_doc": self.source_doc,
            "provenance": self.provenance,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "InstructionInstance":
        return cls(
            id=rec["id"],
            task=_task_from_value(rec["task"]),
            instruction=rec["instruction"],
            input=rec["input"],
            output=rec["output"],
            source_doc=rec["source_doc"],
            provenance=rec.get("provenance", PROVENANCE_GOLD),
        )


def weak_label_provenance(model_id: str) -> str:
    return WEAK_LABEL_PREFIX + model_id


def make_abstract_completion(doc: Document) -> InstructionInstance:
    """Withhold the final sentence of an abstract; it becomes the gold output."""
    if doc.kind is not DocumentKind.ABSTRACT:
        raise CurationError(f"{doc.id}: expected an abstract, got {doc.kind.value}")
    sentences = split_sentences(doc.body)
    if len(sentences) < 2:
        raise SingleSentenceAbstract(f"{doc.id}: abstract has fewer than two sentences")
    head = " ".join(sentences[:-1])
    final = sentences[-1]
    instruction, rendered = render_template(TaskKind.ABSTRACT_COMPLETION, {"abstract": head})
    return InstructionInstance(
        id=f"{TaskKind.ABSTRACT_COMPLETION.value}:{doc.id}",
        task=TaskKind.ABSTRACT_COMPLETION,
        instruction=instruction,
        input=rendered,
        output=final,
        source_doc=doc.id,
    )


def make_case_qa(doc: Document, q: int, client: Callable[[str], str],
                 model_id: str) -> InstructionInstance:
    """One weak-labeled case question: the client's completion is the output.

    `client` maps a prompt string to a completion; `model_id` is recorded in
    the provenance.
    """
    if doc.kind is not DocumentKind.CASE_REPORT:
        raise CurationError(f"{doc.id}: expected a case report, got {doc.kind.value}")
    if not 1 <= q <= 15:
        raise CurationError(f"case question index {q} outside 1..15")
    task = TaskKind(f"case_qa_{q}")
    instruction, rendered = render_template(task, {"case_text": doc.body})
    completion = client(assemble_prompt(instruction, rendered))
    if not completion or not completion.strip():
        raise EmptyWeakLabel(f"{doc.id}: empty completion for {task.value}")
    return InstructionInstance(
        id=f"{task.value}:{doc.id}",
        task=task,
        instruction=instruction,
        input=rendered,
        output=completion.strip(),
        source_doc=doc.id,
        provenance=weak_label_provenance(model_id),
    )


def _blank_out(text: str, spans) -> str:
    out = []
    prev = 0
    for start, end in spans:
        out.append(text[prev:start])
        out.append(BLANK_MARKER)
        prev = end
    out.append(text[prev:])
    return "".join(out)


def make_knowledge_qa(doc: Document, style: TaskKind) -> InstructionInstance:
    """Repurpose a study item into fill-in-the-blank, MCQ, or short-answer QA."""
    if doc.kind is not DocumentKind.STUDY_ITEM or doc.study is None:
        raise CurationError(f"{doc.id}: expected a study item, got {doc.kind.value}")
    item = doc.study

    if style is TaskKind.FILL_IN_BLANK:
        if not item.cloze_spans:
            raise MissingClozeSpans(f"{doc.id}: no cloze spans")
        outside = _blank_out(item.question_text, item.cloze_spans)
        # After blanking, markers must come only from the spans we introduced;
        # a marker already present in the source would corrupt the round trip.
        if outside.count(BLANK_MARKER) != len(item.cloze_spans):
            raise BlankMarkerCollision(f"{doc.id}: source text contains {BLANK_MARKER!r}")
        instruction, rendered = render_template(style, {"question": outside})
        output = item.question_text
    elif style is TaskKind.MCQ:
        if len(item.options) != 4:
            raise WrongOptionCount(f"{doc.id}: MCQ needs 4 options, got {len(item.options)}")
        letter = "ABCD"[item.options.index(item.answer)]
        instruction, rendered = render_template(style, {
            "question": item.question_text,
            "option_a": item.options[0],
            "option_b": item.options[1],
            "option_c": item.options[2],
            "option_d": item.options[3],
        })
        output = letter
    elif style is TaskKind.SHORT_ANSWER_QA:
        instruction, rendered = render_template(style, {"question": item.question_text})
        output = item.answer
    else:
        raise CurationError(f"{style} is not a knowledge-QA style")

    return InstructionInstance(
        id=f"{style.value}:{doc.id}",
        task=style,
        instruction=instruction,
        input=rendered,
        output=output,
        source_doc=doc.id,
    )


def make_long_form_qa(record: dict) -> InstructionInstance:
    """Zero-shot patient-forum question with a reference answer."""
    question = str(record.get("question") or "").strip()
    answer = str(record.get("answer") or "").strip()
    rec_id = str(record.get("id") or "").strip()
    if not (rec_id and question and answer):
        raise CurationError("long-form QA record needs id, question, and answer")
    instruction, rendered = render_template(EvalTask.LONG_FORM_QA, {"question": question})
    return InstructionInstance(
        id=f"{EvalTask.LONG_FORM_QA.value}:{rec_id}",
        task=EvalTask.LONG_FORM_QA,
        instruction=instruction,
        input=rendered,
        output=answer,
        source_doc=rec_id,
    )


def make_external_mcq(record: dict) -> InstructionInstance:
    """Zero-shot MCQ; the answer must equal exactly one of the four options."""
    rec_id = str(record.get("id") or "").strip()
    question = str(record.get("question") or "").strip()
    options = [str(o) for o in (record.get("options") or ())]
    answer = str(record.get("answer") or "")
    if not (rec_id and question and answer):
        raise CurationError("external MCQ record needs id, question, and answer")
    if len(options) != 4:
        raise WrongOptionCount(f"{rec_id}: MCQ needs 4 options, got {len(options)}")
    if options.count(answer) != 1:
        raise CurationError(f"{rec_id}: answer must equal exactly one option text")
    letter = "ABCD"[options.index(answer)]
    instruction, rendered = render_template(EvalTask.EXTERNAL_MCQ, {
        "question": question,
        "option_a": options[0],
        "option_b": options[1],
        "option_c": options[2],
        "option_d": options[3],
    })
    return InstructionInstance(
        id=f"{EvalTask.EXTERNAL_MCQ.value}:{rec_id}",
        task=EvalTask.EXTERNAL_MCQ,
        instruction=instruction,
        input=rendered,
        output=letter,
        source_doc=rec_id,
    )


@dataclass(frozen=True)
class SplitResult:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    seed: int

    def to_record(self) -> dict:
        return {"seed": self.seed, "train": list(self.train), "validation": list(self.validation)}


class EmptyInput(ValueError):
    pass


class DuplicateIds(ValueError):
    pass


def split_train_val(ids, seed: int) -> SplitResult:
    """Deterministic seeded shuffle; train takes floor(0.9 N), validation the rest."""
    ids = list(ids)
    if not ids:
        raise EmptyInput("no ids to split")
    if len(set(ids)) != len(ids):
        raise DuplicateIds("ids must be unique")
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n_train = int(np.floor(0.9 * len(ids)))
    return SplitResult(
        train=tuple(shuffled[:n_train]),
        validation=tuple(shuffled[n_train:]),
        seed=int(seed),
    )
