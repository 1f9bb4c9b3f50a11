"""Task vocabulary: the 19 curated instruction tasks plus the zero-shot
evaluation-only tasks served by the same template machinery."""

from enum import Enum


class TaskKind(str, Enum):
    """The 19 instruction-tuning tasks: 15 case-QA question types, abstract
    completion, and the three knowledge-QA styles."""

    CASE_QA_1 = "case_qa_1"
    CASE_QA_2 = "case_qa_2"
    CASE_QA_3 = "case_qa_3"
    CASE_QA_4 = "case_qa_4"
    CASE_QA_5 = "case_qa_5"
    CASE_QA_6 = "case_qa_6"
    CASE_QA_7 = "case_qa_7"
    CASE_QA_8 = "case_qa_8"
    CASE_QA_9 = "case_qa_9"
    CASE_QA_10 = "case_qa_10"
    CASE_QA_11 = "case_qa_11"
    CASE_QA_12 = "case_qa_12"
    CASE_QA_13 = "case_qa_13"
    CASE_QA_14 = "case_qa_14"
    CASE_QA_15 = "case_qa_15"
    ABSTRACT_COMPLETION = "abstract_completion"
    FILL_IN_BLANK = "fill_in_blank"
    MCQ = "mcq"
    SHORT_ANSWER_QA = "short_answer_qa"


class EvalTask(str, Enum):
    """External zero-shot tasks; evaluated but never part of the tuning set."""

    LONG_FORM_QA = "long_form_qa"
    EXTERNAL_MCQ = "external_mcq"
    EHR_SUMMARIZATION = "ehr_summarization"
    CLINICAL_QA = "clinical_qa"


CASE_QA_TASKS = tuple(TaskKind(f"case_qa_{i}") for i in range(1, 16))

# The 15 case questions, in their canonical order.
CASE_QUESTIONS: dict[TaskKind, str] = {
    TaskKind.CASE_QA_1: "Please provide a summary of the following case report.",
    TaskKind.CASE_QA_2: "What background information is provided for the case?",
    TaskKind.CASE_QA_3: "What was the patient presentation?",
    TaskKind.CASE_QA_4: "What was the work-up?",
    TaskKind.CASE_QA_5: "What did the functional exam demonstrate?",
    TaskKind.CASE_QA_6: "What did the slit lamp exam demonstrate?",
    TaskKind.CASE_QA_7: "What imaging modalities, if any, were acquired?",
    TaskKind.CASE_QA_8: "What did the imaging show?",
    TaskKind.CASE_QA_9: "What did the labs show, if there were any acquired?",
    TaskKind.CASE_QA_10: "What was the differential diagnosis, if there was one provided in the case?",
    TaskKind.CASE_QA_11: "What treatment was provided to the patient?",
    TaskKind.CASE_QA_12: "How did the patient respond to treatment?",
    TaskKind.CASE_QA_13: "What was the outcome of the case?",
    TaskKind.CASE_QA_14: "How is this case novel?",
    TaskKind.CASE_QA_15: "What does this case teach us?",
}

# Tasks whose predictions are free-form text scored against a reference.
TEXT_TASKS = frozenset(
    {TaskKind.ABSTRACT_COMPLETION, TaskKind.FILL_IN_BLANK, TaskKind.SHORT_ANSWER_QA,
     EvalTask.LONG_FORM_QA} | set(CASE_QA_TASKS)
)

# Tasks scored as four-way classification over option letters.
MCQ_TASKS = frozenset({TaskKind.MCQ, EvalTask.EXTERNAL_MCQ})

# Internal-validation tasks: the held-out 10% is scored on these four.
INTERNAL_EVAL_TASKS = (TaskKind.ABSTRACT_COMPLETION, TaskKind.FILL_IN_BLANK,
                       TaskKind.MCQ, TaskKind.SHORT_ANSWER_QA)


def case_qa_index(task: TaskKind) -> int:
    """1-based index of a case-QA task; ValueError for other tasks."""
    name = task.value
    if not name.startswith("case_qa_"):
        raise ValueError(f"{task} is not a case-QA task")
    return int(name.rsplit("_", 1)[1])
