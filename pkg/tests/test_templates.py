import pytest

from eyebench.tasks import CASE_QUESTIONS, EvalTask, TaskKind, case_qa_index
from eyebench.templates import (MissingPlaceholder, all_templates, get_template,
                                registry_digest, render_template)

SAMPLE_PAYLOADS = {
    "case_text": "A 59-year-old man presented with acute monocular vision loss. "
                 "Examination showed a pale retina with a cherry-red spot.",
    "abstract": "To study outcomes of a standard procedure. We reviewed 20 eyes over one year.",
    "question": "Which structure is affected first in primary open-angle glaucoma?",
    "option_a": "Optic nerve head",
    "option_b": "Corneal endothelium",
    "option_c": "Crystalline lens",
    "option_d": "Ciliary body",
    "note": "Patient XXX presents with elevated intraocular pressure in the left eye.",
}


def render_for(key):
    template = get_template(key)
    payload = {name: SAMPLE_PAYLOADS[name] for name in template.placeholders}
    return render_template(key, payload)


class TestTaskVocabulary:
    def test_exactly_19_members(self):
        assert len(TaskKind) == 19

    def test_case_indices(self):
        assert case_qa_index(TaskKind.CASE_QA_4) == 4
        assert CASE_QUESTIONS[TaskKind.CASE_QA_4] == "What was the work-up?"
        with pytest.raises(ValueError):
            case_qa_index(TaskKind.MCQ)


class TestRenderTemplate:
    def test_mcq_wording(self):
        instruction, rendered = render_for(TaskKind.MCQ)
        assert "select the correct answer from the four options" in instruction
        assert rendered.endswith("Please answer with A, B, C, or D only.")
        for label in ("A.", "B.", "C.", "D."):
            assert f" {label} " in " " + rendered + " "

    def test_short_answer_wording(self):
        instruction, _ = render_for(TaskKind.SHORT_ANSWER_QA)
        assert "provide only the answer without explanation" in instruction

    def test_missing_placeholder_named(self):
        with pytest.raises(MissingPlaceholder) as exc:
            render_template(TaskKind.ABSTRACT_COMPLETION, {})
        assert exc.value.placeholder == "abstract"

    def test_rendering_is_byte_exact_substitution(self):
        _, rendered = render_template(TaskKind.SHORT_ANSWER_QA, {"question": "Why?"})
        assert rendered == "Why?"


class TestGoldenFidelity:
    """Any edit to a template string must fail these tests."""

    def test_registry_digest_pinned(self, golden_dir):
        pinned = (golden_dir / "template_registry.sha256").read_text().strip()
        assert registry_digest() == pinned

    def test_every_template_matches_golden(self, golden_dir):
        keys = sorted(all_templates())
        assert len(keys) == 23  # 19 tuning tasks + 4 evaluation-only tasks
        for key in keys:
            instruction, rendered = render_for(key)
            golden = (golden_dir / "templates" / f"{key}.txt").read_text(encoding="utf-8")
            assert golden == instruction + "\n\x1e\n" + rendered + "\n", key

    def test_all_19_tuning_tasks_have_goldens(self, golden_dir):
        for task in TaskKind:
            assert (golden_dir / "templates" / f"{task.value}.txt").exists(), task

    def test_external_mcq_shares_mcq_wording(self):
        a = get_template(TaskKind.MCQ)
        b = get_template(EvalTask.EXTERNAL_MCQ)
        assert a.instruction == b.instruction
        assert a.input_template == b.input_template
