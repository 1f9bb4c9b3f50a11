"""End-to-end pipeline: ingest -> curate -> split -> infer -> extract ->
score -> compare -> report, with a digest manifest so reruns over unchanged
inputs are no-ops and every artifact is a pure function of (inputs, config,
seed)."""

import csv
import hashlib
import io
import json
import logging
import random
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .corpus import (DEFAULT_JOURNAL_WHITELIST, ingest_abstracts,
                     ingest_case_reports, ingest_study_items, load_store,
                     save_store)
from .curation import (CurationError, InstructionInstance, SingleSentenceAbstract,
                       make_abstract_completion, make_case_qa, make_external_mcq,
                       make_knowledge_qa, make_long_form_qa, split_train_val)
from .extraction import ExtractionMethod, extract_freeform, extract_mcq
from .gateway import (BackendConfig, GatewayError, RateLimiter, ResponseCache,
                      batch_complete)
from .metrics import ScorerUnavailable, classify_scores, rouge_l, score_neural
from .stats import BootstrapConfig, compare_models
from .storage import atomic_write_text, canonical_json, read_jsonl, sha256_file, write_jsonl
from .report import render_metric_table
from .tasks import (CASE_QA_TASKS, EvalTask, INTERNAL_EVAL_TASKS, MCQ_TASKS,
                    TEXT_TASKS, TaskKind)
from .templates import assemble_prompt, render_template

log = logging.getLogger(__name__)

STAGES = ("ingest", "curate", "split", "infer", "extract", "score", "compare", "report")

TASK_GROUP_LABELS = (
    ("Internal validation", [t.value for t in INTERNAL_EVAL_TASKS]),
    ("External validation", [EvalTask.LONG_FORM_QA.value, EvalTask.EXTERNAL_MCQ.value]),
)


class ConfigError(ValueError):
    pass


class MissingUpstreamArtifact(FileNotFoundError):
    pass


@dataclass
class RunConfig:
    seed: int
    output_dir: Path
    corpus_paths: dict            # name -> Path (abstracts, case_reports, study_items, ...)
    backends: list                # BackendConfig, in evaluation order
    reference_model: str
    weak_label_backend: str
    bootstrap: BootstrapConfig
    journal_whitelist: tuple = DEFAULT_JOURNAL_WHITELIST
    n_comparisons: int | None = None
    case_sample_size: int | None = None
    eval_selection: str = "validation"   # or "all"
    eval_limit: int | None = None
    scorer_endpoint: str = ""
    cache_dir: Path | None = None
    jobs: int = 4
    imported_responses: dict = field(default_factory=dict)  # model -> Path

    def backend_for(self, model_id: str) -> BackendConfig:
        for b in self.backends:
            if b.model_id == model_id:
                return b
        raise ConfigError(f"model {model_id!r} not among configured backends")

    @property
    def all_models(self) -> list:
        return [b.model_id for b in self.backends] + list(self.imported_responses)


def load_config(path, *, seed_override=None, output_override=None, jobs_override=None) -> RunConfig:
    """Parse and validate the JSON run config; paths resolve against its dir."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    base = path.parent
    problems = []

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else (base / p)

    seed = seed_override if seed_override is not None else raw.get("seed")
    if not isinstance(seed, int):
        problems.append("seed must be an integer")
        seed = 0
    output_dir = Path(output_override) if output_override else Path(raw.get("output_dir", "eyebench-out"))

    corpus_paths = {}
    for name, p in (raw.get("corpus") or {}).items():
        if name not in ("abstracts", "case_reports", "study_items",
                        "long_form_qa", "external_mcq"):
            problems.append(f"unknown corpus key {name!r}")
            continue
        corpus_paths[name] = resolve(p)
    for required in ("abstracts", "case_reports", "study_items"):
        if required not in corpus_paths:
            problems.append(f"corpus.{required} is required")

    backends = []
    for entry in raw.get("backends") or []:
        try:
            backends.append(BackendConfig(
                model_id=entry["model_id"],
                endpoint_url=entry["endpoint_url"],
                auth_env_var=entry.get("auth_env_var", ""),
                max_retries=int(entry.get("max_retries", 3)),
                requests_per_minute=int(entry.get("requests_per_minute", 600)),
                timeout_seconds=float(entry.get("timeout_seconds", 60.0)),
                default_params=dict(entry.get("default_params", {})),
            ))
        except (KeyError, ValueError, TypeError) as exc:
            problems.append(f"bad backend entry {entry!r}: {exc}")
    if not backends:
        problems.append("at least one backend is required")

    imported = {m: resolve(p) for m, p in (raw.get("imported_responses") or {}).items()}
    model_ids = [b.model_id for b in backends] + list(imported)
    if len(set(model_ids)) != len(model_ids):
        problems.append("duplicate model ids across backends/imported_responses")

    reference = raw.get("reference_model") or (backends[0].model_id if backends else "")
    if reference not in model_ids:
        problems.append(f"reference_model {reference!r} not among models {model_ids}")
    weak = raw.get("weak_label_backend") or (backends[0].model_id if backends else "")
    if weak not in [b.model_id for b in backends]:
        problems.append(f"weak_label_backend {weak!r} not among backends")

    b = raw.get("bootstrap") or {}
    try:
        bootstrap_cfg = BootstrapConfig(
            sample_size=int(b.get("sample_size", 30)),
            repetitions=int(b.get("repetitions", 100)),
            seed=seed,
            ci_level=float(b.get("ci_level", 0.95)),
        )
    except ValueError as exc:
        problems.append(f"bad bootstrap config: {exc}")
        bootstrap_cfg = BootstrapConfig(seed=seed if isinstance(seed, int) else 0)

    eval_selection = raw.get("eval_selection", "validation")
    if eval_selection not in ("validation", "all"):
        problems.append(f"eval_selection must be 'validation' or 'all', got {eval_selection!r}")

    if problems:
        raise ConfigError("; ".join(problems))

    return RunConfig(
        seed=seed,
        output_dir=output_dir,
        corpus_paths=corpus_paths,
        backends=backends,
        reference_model=reference,
        weak_label_backend=weak,
        bootstrap=bootstrap_cfg,
        journal_whitelist=tuple(raw.get("journal_whitelist") or DEFAULT_JOURNAL_WHITELIST),
        n_comparisons=raw.get("n_comparisons"),
        case_sample_size=raw.get("case_sample_size"),
        eval_selection=eval_selection,
        eval_limit=raw.get("eval_limit"),
        scorer_endpoint=raw.get("scorer_endpoint", ""),
        cache_dir=resolve(raw["cache_dir"]) if raw.get("cache_dir") else None,
        jobs=int(jobs_override if jobs_override is not None else raw.get("jobs", 4)),
        imported_responses=imported,
    )


def derive_seed(seed: int, label: str) -> int:
    """Stable sub-seed for a named purpose (task, stage, ...)."""
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % (1 << 63)


# ---------------------------------------------------------------------------
# Manifest

class Manifest:
    def __init__(self, path: Path):
        self.path = Path(path)
        self.data = {"tool_version": __version__, "stages": {}}
        if self.path.exists():
            try:
                self.data = json.loads(self.path.read_text(encoding="utf-8"))
            except json.JSONDecodeError:
                log.warning("manifest unreadable; starting fresh")

    def record(self, stage: str, inputs: dict, outputs: dict, seed: int, notes=None) -> None:
        self.data.setdefault("stages", {})[stage] = {
            "inputs": inputs,
            "outputs": outputs,
            "seed": seed,
            "tool_version": __version__,
            "completed_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "notes": notes or {},
        }
        atomic_write_text(self.path, json.dumps(self.data, indent=2, sort_keys=True))

    def is_current(self, stage: str, inputs: dict) -> bool:
        rec = self.data.get("stages", {}).get(stage)
        if not rec or rec.get("inputs") != inputs or rec.get("seed", None) is None:
            return False
        for out_path, digest in rec.get("outputs", {}).items():
            p = Path(out_path)
            if not p.exists() or sha256_file(p) != digest:
                return False
        return True


def _digest_map(paths) -> dict:
    out = {}
    for p in paths:
        p = Path(p)
        if not p.exists():
            raise MissingUpstreamArtifact(str(p))
        out[str(p)] = sha256_file(p)
    return out


def _config_fingerprint(cfg: RunConfig) -> str:
    payload = {
        "seed": cfg.seed,
        "reference": cfg.reference_model,
        "weak": cfg.weak_label_backend,
        "models": cfg.all_models,
        "bootstrap": [cfg.bootstrap.sample_size, cfg.bootstrap.repetitions, cfg.bootstrap.ci_level],
        "whitelist": list(cfg.journal_whitelist),
        "case_sample_size": cfg.case_sample_size,
        "eval_selection": cfg.eval_selection,
        "eval_limit": cfg.eval_limit,
        "n_comparisons": cfg.n_comparisons,
    }
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Stage implementations. Each reads/writes only its documented files.

def _paths(cfg: RunConfig) -> dict:
    out = cfg.output_dir
    return {
        "store_abstracts": out / "corpus" / "abstracts.jsonl",
        "store_case_reports": out / "corpus" / "case_reports.jsonl",
        "store_study_items": out / "corpus" / "study_items.jsonl",
        "instructions": out / "curated" / "instructions.jsonl",
        "curation_counts": out / "curated" / "counts.json",
        "split": out / "split" / "split.json",
        "responses_dir": out / "responses",
        "extracted_dir": out / "extracted",
        "scores": out / "scores" / "scores.csv",
        "classification": out / "scores" / "classification.csv",
        "neural": out / "scores" / "neural.csv",
        "summaries": out / "stats" / "summaries.csv",
        "comparisons": out / "stats" / "comparisons.csv",
        "report_md": out / "report" / "metric_table.md",
        "report_csv": out / "report" / "metric_table.csv",
    }


def stage_ingest(cfg: RunConfig, paths: dict) -> dict:
    notes = {}
    results = {
        "store_abstracts": ingest_abstracts(read_jsonl(cfg.corpus_paths["abstracts"]),
                                            cfg.journal_whitelist),
        "store_case_reports": ingest_case_reports(read_jsonl(cfg.corpus_paths["case_reports"])),
        "store_study_items": ingest_study_items(read_jsonl(cfg.corpus_paths["study_items"])),
    }
    for key, result in results.items():
        save_store(paths[key], result.documents)
        notes[key] = {"emitted": len(result.documents), "skipped": result.skipped,
                      "rejected": result.rejected, "errors": result.errors}
    return notes


def stage_curate(cfg: RunConfig, paths: dict) -> dict:
    abstracts = load_store(paths["store_abstracts"])
    cases = load_store(paths["store_case_reports"])
    items = load_store(paths["store_study_items"])
    instances: list[InstructionInstance] = []
    counts = {"single_sentence_abstracts": 0, "knowledge_skipped": 0, "weak_label_failures": 0}

    for doc in abstracts:
        try:
            instances.append(make_abstract_completion(doc))
        except SingleSentenceAbstract:
            counts["single_sentence_abstracts"] += 1

    for doc in items:
        assert doc.study is not None
        styles = [TaskKind.SHORT_ANSWER_QA]
        if doc.study.cloze_spans:
            styles.append(TaskKind.FILL_IN_BLANK)
        if len(doc.study.options) == 4:
            styles.append(TaskKind.MCQ)
        for style in styles:
            try:
                instances.append(make_knowledge_qa(doc, style))
            except CurationError:
                counts["knowledge_skipped"] += 1

    # Weak-labeled case QA over a seeded sample of the case reports.
    sample = cases
    if cfg.case_sample_size is not None and cfg.case_sample_size < len(cases):
        rng = random.Random(derive_seed(cfg.seed, "case-sample"))
        sample = rng.sample(cases, cfg.case_sample_size)
    backend = cfg.backend_for(cfg.weak_label_backend)
    cache = ResponseCache(cfg.cache_dir or cfg.output_dir / "cache")
    limiter = RateLimiter(backend.requests_per_minute)

    case_tasks = [(doc, task) for doc in sample for task in CASE_QA_TASKS]
    prompts = []
    for doc, task in case_tasks:
        instruction, rendered = render_template(task, {"case_text": doc.body})
        prompts.append(assemble_prompt(instruction, rendered))
    responses = batch_complete(backend, prompts, max_in_flight=cfg.jobs,
                               cache=cache, limiter=limiter)
    for (doc, task), response in zip(case_tasks, responses):
        if isinstance(response, GatewayError) or not response.text.strip():
            counts["weak_label_failures"] += 1
            continue
        try:
            instances.append(make_case_qa(doc, int(task.value.rsplit("_", 1)[1]),
                                          lambda _prompt, _t=response.text: _t,
                                          backend.model_id))
        except CurationError:
            counts["weak_label_failures"] += 1

    # External zero-shot inputs, when configured.
    if "long_form_qa" in cfg.corpus_paths:
        for rec in read_jsonl(cfg.corpus_paths["long_form_qa"]):
            instances.append(make_long_form_qa(rec))
    if "external_mcq" in cfg.corpus_paths:
        for rec in read_jsonl(cfg.corpus_paths["external_mcq"]):
            instances.append(make_external_mcq(rec))

    instances.sort(key=lambda inst: (inst.task.value, inst.id))
    write_jsonl(paths["instructions"], (inst.to_record() for inst in instances))
    counts["instances"] = len(instances)
    atomic_write_text(paths["curation_counts"], canonical_json(counts))
    return counts


def _load_instances(paths) -> list[InstructionInstance]:
    return [InstructionInstance.from_record(r) for r in read_jsonl(paths["instructions"])]


def stage_split(cfg: RunConfig, paths: dict) -> dict:
    instances = _load_instances(paths)
    groups = {
        "literature_understanding": [i.id for i in instances
                                     if i.task is TaskKind.ABSTRACT_COMPLETION],
        "knowledge_qa": [i.id for i in instances
                         if i.task in (TaskKind.FILL_IN_BLANK, TaskKind.MCQ,
                                       TaskKind.SHORT_ANSWER_QA)],
        "patient_case_qa": [i.id for i in instances if i.task in set(CASE_QA_TASKS)],
    }
    record = {"seed": cfg.seed, "groups": {}, "train": [], "validation": []}
    for name, ids in groups.items():
        if not ids:
            record["groups"][name] = {"train": [], "validation": []}
            continue
        if name == "patient_case_qa":
            # training-only material: never used for validation
            record["groups"][name] = {"train": sorted(ids), "validation": []}
            record["train"].extend(sorted(ids))
            continue
        result = split_train_val(ids, derive_seed(cfg.seed, f"split:{name}"))
        record["groups"][name] = {"train": list(result.train),
                                  "validation": list(result.validation)}
        record["train"].extend(result.train)
        record["validation"].extend(result.validation)
    atomic_write_text(paths["split"], canonical_json(record))
    return {name: {k: len(v) for k, v in g.items()} for name, g in record["groups"].items()}


def _eval_instances(cfg: RunConfig, paths: dict) -> list[InstructionInstance]:
    instances = _load_instances(paths)
    internal = [i for i in instances if i.task in set(INTERNAL_EVAL_TASKS)]
    external = [i for i in instances if isinstance(i.task, EvalTask)]
    if cfg.eval_selection == "validation":
        split = json.loads(Path(paths["split"]).read_text(encoding="utf-8"))
        validation = set(split["validation"])
        internal = [i for i in internal if i.id in validation]
    chosen = internal + external
    chosen.sort(key=lambda inst: (inst.task.value, inst.id))
    if cfg.eval_limit:
        chosen = chosen[:cfg.eval_limit]
    return chosen


def stage_infer(cfg: RunConfig, paths: dict) -> dict:
    instances = _eval_instances(cfg, paths)
    prompts = [assemble_prompt(i.instruction, i.input) for i in instances]
    notes = {}
    paths["responses_dir"].mkdir(parents=True, exist_ok=True)
    for backend in cfg.backends:
        cache = ResponseCache(cfg.cache_dir or cfg.output_dir / "cache")
        limiter = RateLimiter(backend.requests_per_minute)
        responses = batch_complete(backend, prompts, max_in_flight=cfg.jobs,
                                   cache=cache, limiter=limiter)
        records = []
        failures = 0
        for inst, response in zip(instances, responses):
            if isinstance(response, GatewayError):
                failures += 1
                records.append({"id": inst.id, "model": backend.model_id,
                                "error": str(response)})
            else:
                records.append({"id": inst.id, "model": backend.model_id,
                                "text": response.text, "cached": response.cached,
                                "request_digest": response.request_digest})
        write_jsonl(paths["responses_dir"] / f"{backend.model_id}.jsonl", records)
        notes[backend.model_id] = {"prompts": len(prompts), "failures": failures}
    for model, source in cfg.imported_responses.items():
        by_id = {r["id"]: r for r in read_jsonl(source)}
        records = []
        missing = 0
        for inst in instances:
            rec = by_id.get(inst.id)
            if rec is None or "text" not in rec:
                missing += 1
                records.append({"id": inst.id, "model": model, "error": "missing import"})
            else:
                records.append({"id": inst.id, "model": model, "text": rec["text"],
                                "cached": True, "request_digest": ""})
        write_jsonl(paths["responses_dir"] / f"{model}.jsonl", records)
        notes[model] = {"prompts": len(prompts), "failures": missing, "imported": True}
    return notes


_MCQ_INPUT = re.compile(
    r"^(?P<question>.*?)\sA\.\s(?P<a>.*?)\sB\.\s(?P<b>.*?)\sC\.\s(?P<c>.*?)"
    r"\sD\.\s(?P<d>.*?)\s*Please answer with A, B, C, or D only\.$",
    re.DOTALL,
)


def parse_mcq_options(input_text: str) -> dict:
    """Recover the four option texts from a rendered MCQ input."""
    m = _MCQ_INPUT.match(input_text.strip())
    if not m:
        raise ValueError("input does not look like a rendered MCQ")
    return {"A": m.group("a"), "B": m.group("b"), "C": m.group("c"), "D": m.group("d")}


def stage_extract(cfg: RunConfig, paths: dict) -> dict:
    instances = {i.id: i for i in _eval_instances(cfg, paths)}
    notes = {}
    paths["extracted_dir"].mkdir(parents=True, exist_ok=True)
    for model in cfg.all_models:
        source = paths["responses_dir"] / f"{model}.jsonl"
        if not source.exists():
            raise MissingUpstreamArtifact(str(source))
        records = []
        unparseable = 0
        for rec in read_jsonl(source):
            inst = instances.get(rec["id"])
            if inst is None:
                continue
            raw = rec.get("text", "")
            if inst.task in MCQ_TASKS:
                extracted = extract_mcq(raw, parse_mcq_options(inst.input),
                                        kind=inst.task.value)
            else:
                extracted = extract_freeform(raw, inst.task)
            if extracted.method is ExtractionMethod.UNPARSEABLE:
                unparseable += 1
            records.append({"id": inst.id, "model": model, "task": inst.task.value,
                            "value": extracted.value, "method": extracted.method.value})
        write_jsonl(paths["extracted_dir"] / f"{model}.jsonl", records)
        notes[model] = {"extracted": len(records), "unparseable": unparseable}
    return notes


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def stage_score(cfg: RunConfig, paths: dict) -> dict:
    instances = {i.id: i for i in _eval_instances(cfg, paths)}
    score_rows = []
    class_rows = []
    neural_rows = []
    notes = {}
    for model in cfg.all_models:
        source = paths["extracted_dir"] / f"{model}.jsonl"
        if not source.exists():
            raise MissingUpstreamArtifact(str(source))
        extracted = read_jsonl(source)
        mcq_by_task: dict = {}
        text_pairs = []
        for rec in extracted:
            inst = instances.get(rec["id"])
            if inst is None:
                continue
            task = inst.task.value
            if inst.task in MCQ_TASKS:
                ok = rec["method"] != ExtractionMethod.UNPARSEABLE.value and \
                    rec["value"] == inst.output
                score_rows.append((task, model, inst.id, 1.0 if ok else 0.0))
                mcq_by_task.setdefault(task, []).append((rec, inst.output))
            elif inst.task in TEXT_TASKS:
                score = rouge_l(rec["value"], inst.output).f
                score_rows.append((task, model, inst.id, score))
                text_pairs.append((inst.id, task, rec["value"], inst.output))
        for task, entries in mcq_by_task.items():
            preds = [r["value"] if r["method"] != ExtractionMethod.UNPARSEABLE.value else ""
                     for r, _ in entries]
            golds = [gold for _, gold in entries]
            cls = classify_scores(preds, golds)
            class_rows.append((task, model, f"{cls.accuracy:.6f}", f"{cls.macro_f1:.6f}",
                               cls.n_unparseable))
        if cfg.scorer_endpoint and text_pairs:
            try:
                scored = score_neural([(c, r) for _, _, c, r in text_pairs],
                                      cfg.scorer_endpoint)
                for (inst_id, task, _, _), ns in zip(text_pairs, scored):
                    neural_rows.append((task, model, inst_id,
                                        f"{ns.bert_score:.6f}", f"{ns.bart_score:.6f}"))
            except ScorerUnavailable as exc:
                notes.setdefault("neural_unavailable", {})[model] = str(exc)

    score_rows.sort()
    _write_csv(paths["scores"], ["task", "model", "instance_id", "score"],
               [(t, m, i, f"{s:.6f}") for t, m, i, s in score_rows])
    class_rows.sort()
    _write_csv(paths["classification"],
               ["task", "model", "accuracy", "macro_f1", "n_unparseable"], class_rows)
    if neural_rows:
        neural_rows.sort()
        _write_csv(paths["neural"],
                   ["task", "model", "instance_id", "bert_score", "bart_score"], neural_rows)
    notes["rows"] = len(score_rows)
    return notes


def _read_scores(paths) -> dict:
    by_task: dict = {}
    with open(paths["scores"], encoding="utf-8") as f:
        for row in csv.DictReader(f):
            by_task.setdefault(row["task"], {}).setdefault(row["model"], []).append(
                (row["instance_id"], float(row["score"])))
    return by_task


def stage_compare(cfg: RunConfig, paths: dict) -> dict:
    by_task = _read_scores(paths)
    summary_rows = []
    comparison_rows = []
    skipped = []
    for task in sorted(by_task):
        per_model = by_task[task]
        if cfg.reference_model not in per_model:
            skipped.append(task)
            continue
        ordered = {}
        for model in cfg.all_models:
            if model not in per_model:
                continue
            ordered[model] = [s for _, s in sorted(per_model[model])]
        lengths = {len(v) for v in ordered.values()}
        if len(lengths) != 1:
            skipped.append(task)
            continue
        task_cfg = BootstrapConfig(
            sample_size=cfg.bootstrap.sample_size,
            repetitions=cfg.bootstrap.repetitions,
            seed=derive_seed(cfg.seed, f"bootstrap:{task}"),
            ci_level=cfg.bootstrap.ci_level,
        )
        summaries, comparisons = compare_models(ordered, cfg.reference_model, task_cfg,
                                                n_comparisons=cfg.n_comparisons)
        for model in ordered:
            s = summaries[model]
            summary_rows.append((task, model, f"{s.mean:.6f}", f"{s.sd:.6f}",
                                 f"{s.ci_low:.6f}", f"{s.ci_high:.6f}",
                                 len(ordered[model])))
        for c in comparisons:
            comparison_rows.append((task, c.model_a, c.model_b, f"{c.p_raw:.6f}",
                                    f"{c.p_adjusted:.6f}", c.n_comparisons,
                                    c.marker.value))
    _write_csv(paths["summaries"],
               ["task", "model", "mean", "sd", "ci_low", "ci_high", "n_instances"],
               summary_rows)
    _write_csv(paths["comparisons"],
               ["task", "model_a", "model_b", "p_raw", "p_adjusted", "n_comparisons",
                "marker"], comparison_rows)
    return {"tasks": len(by_task) - len(skipped), "skipped": skipped}


def stage_report(cfg: RunConfig, paths: dict) -> dict:
    from .stats import BootstrapSummary, ComparisonResult, Marker

    summaries = {}
    with open(paths["summaries"], encoding="utf-8") as f:
        for row in csv.DictReader(f):
            summaries[(row["task"], row["model"])] = BootstrapSummary(
                mean=float(row["mean"]), sd=float(row["sd"]),
                ci_low=float(row["ci_low"]), ci_high=float(row["ci_high"]),
                replicate_means=(),
            )
    comparisons = {}
    with open(paths["comparisons"], encoding="utf-8") as f:
        for row in csv.DictReader(f):
            comparisons[(row["task"], row["model_b"])] = ComparisonResult(
                model_a=row["model_a"], model_b=row["model_b"],
                p_raw=float(row["p_raw"]), p_adjusted=float(row["p_adjusted"]),
                n_comparisons=int(row["n_comparisons"]),
                marker=Marker(row["marker"]),
            )
    tasks_present = sorted({t for t, _ in summaries})
    groups = []
    grouped_tasks = set()
    for label, tasks in TASK_GROUP_LABELS:
        present = [t for t in tasks if t in tasks_present]
        if present:
            groups.append((label, present))
            grouped_tasks.update(present)
    leftovers = [t for t in tasks_present if t not in grouped_tasks]
    if leftovers:
        groups.append(("Other tasks", leftovers))
    models = [m for m in cfg.all_models if any((t, m) in summaries for t in tasks_present)]
    markdown, csv_text = render_metric_table(
        summaries, comparisons, tasks_present, models,
        reference_model=cfg.reference_model, groups=groups,
    )
    atomic_write_text(paths["report_md"], markdown)
    atomic_write_text(paths["report_csv"], csv_text)
    return {"tasks": len(tasks_present), "models": len(models)}


_STAGE_SPECS = {
    "ingest": {
        "fn": stage_ingest,
        "inputs": lambda cfg, p: list(cfg.corpus_paths.values()),
        "outputs": lambda cfg, p: [p["store_abstracts"], p["store_case_reports"],
                                   p["store_study_items"]],
    },
    "curate": {
        "fn": stage_curate,
        "inputs": lambda cfg, p: [p["store_abstracts"], p["store_case_reports"],
                                  p["store_study_items"]],
        "outputs": lambda cfg, p: [p["instructions"], p["curation_counts"]],
    },
    "split": {
        "fn": stage_split,
        "inputs": lambda cfg, p: [p["instructions"]],
        "outputs": lambda cfg, p: [p["split"]],
    },
    "infer": {
        "fn": stage_infer,
        "inputs": lambda cfg, p: [p["instructions"], p["split"]],
        "outputs": lambda cfg, p: [p["responses_dir"] / f"{m}.jsonl"
                                   for m in cfg.all_models],
    },
    "extract": {
        "fn": stage_extract,
        "inputs": lambda cfg, p: [p["instructions"], p["split"]] +
                                 [p["responses_dir"] / f"{m}.jsonl" for m in cfg.all_models],
        "outputs": lambda cfg, p: [p["extracted_dir"] / f"{m}.jsonl"
                                   for m in cfg.all_models],
    },
    "score": {
        "fn": stage_score,
        "inputs": lambda cfg, p: [p["instructions"], p["split"]] +
                                 [p["extracted_dir"] / f"{m}.jsonl" for m in cfg.all_models],
        "outputs": lambda cfg, p: [p["scores"], p["classification"]],
    },
    "compare": {
        "fn": stage_compare,
        "inputs": lambda cfg, p: [p["scores"]],
        "outputs": lambda cfg, p: [p["summaries"], p["comparisons"]],
    },
    "report": {
        "fn": stage_report,
        "inputs": lambda cfg, p: [p["summaries"], p["comparisons"]],
        "outputs": lambda cfg, p: [p["report_md"], p["report_csv"]],
    },
}


def run_pipeline(cfg: RunConfig, stages=None, force: bool = False) -> dict:
    """Run the requested stages in canonical order; unchanged stages are
    skipped via the manifest's digest check."""
    requested = list(stages) if stages else list(STAGES)
    unknown = [s for s in requested if s not in STAGES]
    if unknown:
        raise ConfigError(f"unknown stages: {unknown}")
    ordered = [s for s in STAGES if s in requested]
    paths = _paths(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg.output_dir / "manifest.json")
    fingerprint = _config_fingerprint(cfg)
    executed = {}
    for stage in ordered:
        spec = _STAGE_SPECS[stage]
        inputs = _digest_map(spec["inputs"](cfg, paths))
        inputs["config"] = fingerprint
        if not force and manifest.is_current(stage, inputs):
            log.info("stage %s up to date; skipping", stage)
            executed[stage] = "skipped"
            continue
        log.info("running stage %s", stage)
        notes = spec["fn"](cfg, paths)
        outputs = {str(p): sha256_file(p) for p in spec["outputs"](cfg, paths)}
        manifest.record(stage, inputs, outputs, cfg.seed, notes)
        executed[stage] = notes
    return executed
