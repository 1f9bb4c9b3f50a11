"""Instruction template registry.

Every task renders from a fixed template stored verbatim here (wording is
part of the dataset contract, typos included); rendering is byte-exact
substitution of named placeholders. The registry digest is pinned by a golden
test, so any wording edit is a deliberate, visible change.
"""

from dataclasses import dataclass
from string import Formatter

from .storage import canonical_json, sha256_text
from .tasks import CASE_QA_TASKS, CASE_QUESTIONS, EvalTask, TaskKind


class MissingPlaceholder(KeyError):
    """A template placeholder was not supplied in the payload."""

    def __init__(self, placeholder: str):
        super().__init__(placeholder)
        self.placeholder = placeholder

    def __str__(self) -> str:
        return f"missing template placeholder: {self.placeholder!r}"


@dataclass(frozen=True)
class Template:
    task: str
    instruction: str
    input_template: str

    @property
    def placeholders(self) -> tuple[str, ...]:
        return tuple(f for _, f, _, _ in Formatter().parse(self.input_template) if f)


CASE_QA_INSTRUCTION = (
    "Task: The task is to answer a question or provide more information "
    "related to the ophthalmology case report that is given."
)

_TEMPLATES: dict[str, Template] = {}


def _register(task, instruction: str, input_template: str) -> None:
    key = task.value
    _TEMPLATES[key] = Template(task=key, instruction=instruction, input_template=input_template)


for _t in CASE_QA_TASKS:
    _register(_t, CASE_QA_INSTRUCTION, "{case_text}\n\nQuestion: " + CASE_QUESTIONS[_t])

_register(
    TaskKind.ABSTRACT_COMPLETION,
    "Task: The task is to complete the ophthalmology related abstract which is "
    "provided. The output is the singular final sentence of the abstract which "
    "has been removed",
    "{abstract}",
)
_register(
    TaskKind.FILL_IN_BLANK,
    'Task: The task is to fill in the missing word or words represented in each '
    'input by on or more "...". The output is the input with all instances of '
    '"..." filled in.',
    "{question}",
)
_register(
    TaskKind.MCQ,
    "Task: Given a multiple-choice question in the field of ophthalmology, "
    "select the correct answer from the four options.",
    "{question} A. {option_a} B. {option_b} C. {option_c} D. {option_d} "
    "Please answer with A, B, C, or D only.",
)
_register(
    TaskKind.SHORT_ANSWER_QA,
    "Task: Given a medical question in the field of ophthalmology, provide your "
    "answer to the question. Please provide only the answer without explanation.",
    "{question}",
)
_register(
    EvalTask.LONG_FORM_QA,
    "Task: The task is to answer the question which has been provided by a "
    "patient through an online forum where they can ask Ophthalmologists "
    "questions.",
    "{question}",
)
# The external zero-shot MCQ task shares the MCQ wording verbatim.
_register(
    EvalTask.EXTERNAL_MCQ,
    "Task: Given a multiple-choice question in the field of ophthalmology, "
    "select the correct answer from the four options.",
    "{question} A. {option_a} B. {option_b} C. {option_c} D. {option_d} "
    "Please answer with A, B, C, or D only.",
)
_register(
    EvalTask.EHR_SUMMARIZATION,
    "Task: One liners are often used as a standardized format for presenting a "
    "patients case, either before going into more detail during a presentation "
    "or as a quick refresher so everyone remembers the relevant history of the "
    "patient. Your task is to create a one line summary of the patients case in "
    "the following note. The format should be: *patient age* *patient gender* "
    "with a past medical history of *past medical history* presents today with "
    "*chief complaint* in the setting of *relevant history or concurrent "
    "symptoms.*",
    "{note}",
)
_register(
    EvalTask.CLINICAL_QA,
    "Task: Your task is to provide answers to medical questions by analyzing "
    "clinical notes from actual patient cases. Given an ophthalmology note from "
    "an encounter with a patient in the ED or clinic, please answer the "
    "following clinical questions:\n"
    "Question 1. What was the work-up?\n"
    "Question 2. What did the slit lamp exam demonstrate?\n"
    "Question 3. What treatment was provided to the patient?\n"
    "Question 4. What is the expected clinical course of the patient following "
    "the outlined treatment?\n"
    "The format of your response should be as follows:\n"
    "Question 1: [Your answer]\n"
    "Question 2: [Your answer]\n"
    "Question 3: [Your answer]\n"
    "Question 4: [Your answer]",
    "{note}",
)


def get_template(task) -> Template:
    key = task.value if hasattr(task, "value") else str(task)
    try:
        return _TEMPLATES[key]
    except KeyError:
        raise KeyError(f"no template registered for task {key!r}") from None


def render_template(task, payload: dict) -> tuple[str, str]:
    """Render (instruction, input) for a task; byte-exact substitution."""
    template = get_template(task)
    for name in template.placeholders:
        if name not in payload:
            raise MissingPlaceholder(name)
    rendered = template.input_template.format(**{
        k: str(v) for k, v in payload.items()
    })
    return template.instruction, rendered


def all_templates() -> dict[str, Template]:
    return dict(_TEMPLATES)


def registry_digest() -> str:
    """Digest over the canonical serialization of every template string."""
    payload = {
        key: {"instruction": t.instruction, "input": t.input_template}
        for key, t in _TEMPLATES.items()
    }
    return sha256_text(canonical_json(payload))


def assemble_prompt(instruction: str, input_text: str) -> str:
    """The single point where instruction and input become one prompt string."""
    return f"{instruction}\n\n{input_text}"
