"""Datasets, batch runs, and syntactic/semantic accuracy reports."""
from __future__ import annotations

import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .docs import DocCorpus, load_corpus
from .llm import GatewayError, ProviderConfig, Transcript, make_provider
from .pipeline import DocRetriever, MethodVariant, PipelineTrace, run_task
from .planner import FeedbackStatus, PlannerConfig
from .retrieval import RetrieverConfig
from .semantics import PlanValidationError, validate_plan
from .syntax import PddlSyntaxError, check_pair, errors_only, parse_domain, parse_problem

log = logging.getLogger(__name__)

TASK_FILES = ("dd.txt", "pd.txt", "gold_domain.pddl", "gold_problem.pddl")
_SYNTAX_FAILURES = {FeedbackStatus.SYNTAX_ERROR.value, FeedbackStatus.GENERATION_FAILURE.value, "error"}


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class TaskInstance:
    task_id: str
    dd_text: str
    pd_text: str
    gold_df_text: str
    gold_pf_text: str


def load_dataset(path: str | Path, validate: bool = True) -> list[TaskInstance]:
    """Load every task directory below ``path``, sorted by task id."""
    root = Path(path)
    if not root.is_dir():
        raise DatasetError(f"{root}: not a directory")
    dirs = sorted({p.parent for name in TASK_FILES for p in root.rglob(name)})
    if not dirs:
        raise DatasetError(f"{root}: no task directories found")
    problems: list[str] = []
    tasks: dict[str, TaskInstance] = {}
    for d in dirs:
        missing = [f for f in TASK_FILES if not (d / f).is_file()]
        if missing:
            problems.append(f"task {d.name}: missing {', '.join(missing)}")
            continue
        if d.name in tasks:
            problems.append(f"task {d.name}: duplicate task id")
            continue
        texts = [(d / f).read_text(encoding="utf-8") for f in TASK_FILES]
        task = TaskInstance(d.name, *texts)
        if validate:
            _, _, diags = check_pair(task.gold_df_text, task.gold_pf_text)
            errs = errors_only(diags)
            if errs:
                problems.append(f"task {d.name}: gold files have diagnostics: {errs[0].format()}")
                continue
        tasks[d.name] = task
    if problems:
        raise DatasetError("; ".join(problems))
    return [tasks[k] for k in sorted(tasks)]


def bundled_dataset_path() -> Path:
    return Path(__file__).parent / "data" / "blocksworld"


@dataclass
class RunRecord:
    task_id: str
    variant: dict
    rounds_used: int
    final_status: str
    syntactic_ok: bool
    semantic_ok: bool
    plan: list[str] | None = None
    error_note: str | None = None
    round_statuses: list[str] = field(default_factory=list)
    # earliest round from which every later round was free of syntax errors
    syntactic_round: int | None = None

    def __post_init__(self):
        if self.semantic_ok and not (self.syntactic_ok and self.plan is not None):
            raise ValueError("semantic_ok requires syntactic_ok and a plan")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**d)


def _syntactic_round(statuses: list[str]) -> int | None:
    if not statuses or statuses[-1] in _SYNTAX_FAILURES:
        return None
    r = len(statuses) - 1
    while r > 0 and statuses[r - 1] not in _SYNTAX_FAILURES:
        r -= 1
    return r


def evaluate_record(trace: PipelineTrace, task: TaskInstance, planner_cfg: PlannerConfig | None = None) -> RunRecord:
    """Score a trace: plan solved from the generated pair, validated on gold."""
    strict = planner_cfg.strict if planner_cfg else False
    variant = trace.variant.to_dict()
    statuses = [r.feedback.status.value for r in trace.rounds]
    if trace.error is not None or not trace.rounds:
        return RunRecord(task.task_id, variant, trace.refinements, "error", False, False, None,
                         trace.error or "no rounds recorded", statuses + ["error"], None)

    fb = trace.final_feedback
    syntactic = fb.status.value not in _SYNTAX_FAILURES
    plan = [str(s) for s in fb.plan] if fb.plan is not None else None
    semantic, note = False, None
    if fb.status is FeedbackStatus.SUCCESS:
        try:
            gold_d = parse_domain(task.gold_df_text, strict)
            gold_p = parse_problem(task.gold_pf_text, strict)
            verdict = validate_plan(gold_d, gold_p, fb.plan)
            semantic = verdict.valid
            if not semantic:
                note = f"gold validation: {verdict.describe()}"
        except PlanValidationError as e:
            note = f"gold validation: {e}"
        except PddlSyntaxError as e:
            note = f"gold files do not parse: {e}"
    return RunRecord(task.task_id, variant, trace.refinements, fb.status.value, syntactic, semantic, plan,
                     note, statuses, _syntactic_round(statuses))


@dataclass
class MetricsReport:
    variant: dict
    n_tasks: int
    syntactic_accuracy: float
    semantic_accuracy: float
    per_round_syntactic: list[float]

    def to_dict(self) -> dict:
        return asdict(self)


def aggregate(records: list[RunRecord]) -> MetricsReport:
    if not records:
        raise ValueError("cannot aggregate an empty record set")
    variant = records[0].variant
    if any(r.variant != variant for r in records):
        raise ValueError("records mix several variants")
    n = len(records)
    syn = sum(r.syntactic_ok for r in records)
    sem = sum(r.semantic_ok for r in records)
    max_rounds = int(variant.get("max_rounds") or 0)
    curve = [
        100.0 * sum(1 for rec in records if rec.syntactic_round is not None and rec.syntactic_round <= r) / n
        for r in range(max_rounds + 1)
    ]
    return MetricsReport(variant, n, 100.0 * syn / n, 100.0 * sem / n, curve)


def fmt_pct(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.1f}"


def variant_label(variant: dict) -> str:
    return f"{variant.get('generation')}+{variant.get('refinement')}@{variant.get('max_rounds')}"


def format_table(report: MetricsReport) -> str:
    head = f"{'variant':<40} {'n':>5}  syntax / semantic"
    row = (f"{variant_label(report.variant):<40} {report.n_tasks:>5}  "
           f"{fmt_pct(report.syntactic_accuracy)} / {fmt_pct(report.semantic_accuracy)}")
    return f"{head}\n{row}\n"


def curve_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["round", "accuracy"])
    for r, acc in enumerate(report.per_round_syntactic):
        w.writerow([r, acc])
    return buf.getvalue()


def records_jsonl(records: list[RunRecord]) -> str:
    return "".join(r.to_json() + "\n" for r in records)


def load_records(path: str | Path) -> list[RunRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [RunRecord.from_dict(json.loads(l)) for l in lines if l.strip()]


def emit_report(report: MetricsReport, records: list[RunRecord], out_dir: str | Path | None = None,
                stream=None) -> dict[str, Path]:
    """Print the table; write records.jsonl, report.json and curve.csv to ``out_dir``."""
    stream = stream or sys.stdout
    stream.write(format_table(report))
    written: dict[str, Path] = {}
    if out_dir is None:
        return written
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "records": (out / "records.jsonl", records_jsonl(records)),
        "report": (out / "report.json", json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"),
        "curve": (out / "curve.csv", curve_csv(report)),
    }
    for key, (path, text) in files.items():
        path.write_text(text, encoding="utf-8")
        written[key] = path
    return written


# -- batch runs -------------------------------------------------------------


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    variant: MethodVariant
    planner: PlannerConfig
    provider: ProviderConfig
    retriever: RetrieverConfig
    dataset: Path
    output_dir: Path
    corpus: Path | None = None
    max_concurrency: int = 4
    seed: int = 0  # reserved; runs are deterministic at temperature 0

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "RunConfig":
        base = base or Path.cwd()

        def rel(p):
            if p is None:
                return None
            p = Path(p)
            return p if p.is_absolute() else base / p

        try:
            provider = dict(d.get("provider") or {})
            if provider.get("script"):
                provider["script"] = str(rel(provider["script"]))
            return cls(
                variant=MethodVariant.from_dict(d.get("variant") or {}),
                planner=PlannerConfig.from_dict(d.get("planner")),
                provider=ProviderConfig.from_dict(provider),
                retriever=RetrieverConfig.from_dict(d.get("retriever")),
                dataset=rel(d["dataset"]),
                output_dir=rel(d.get("output_dir", "out")),
                corpus=rel(d.get("corpus")),
                max_concurrency=int(d.get("max_concurrency", 4)),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid run config: {e}") from None

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        p = Path(path)
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read run config {p}: {e}") from None
        return cls.from_dict(data, p.parent)


def _run_one(task: TaskInstance, cfg: RunConfig, corpus: DocCorpus | None,
             shared_retriever: DocRetriever | None, out: Path) -> RunRecord:
    transcript = Transcript()
    try:
        provider = make_provider(cfg.provider, task.task_id)
        retriever = shared_retriever
        if corpus is not None and cfg.retriever.kind == "embedding":
            from .llm import embed
            retriever = DocRetriever(corpus, cfg.retriever, lambda t: embed(t, provider, transcript),
                                     cfg.provider.embedding_model or cfg.provider.model_name,
                                     out / "embeddings.json")
        trace = run_task(task, cfg.variant, corpus, provider, cfg.planner,
                         retriever=retriever, transcript=transcript)
    except (GatewayError, OSError, ValueError) as e:
        trace = PipelineTrace(task.task_id, cfg.variant, error=f"{type(e).__name__}: {e}")
    (out / "traces" / f"{task.task_id}.json").write_text(trace.to_json(), encoding="utf-8")
    transcript.save(out / "transcripts" / f"{task.task_id}.jsonl")
    return evaluate_record(trace, task, cfg.planner)


def run_batch(cfg: RunConfig, stream=None) -> tuple[list[RunRecord], MetricsReport]:
    tasks = load_dataset(cfg.dataset)
    corpus = None
    if cfg.variant.generation != "base" or cfg.variant.refinement in ("feedback_retrieved", "code_retrieved"):
        corpus = load_corpus(cfg.corpus)
    shared = DocRetriever(corpus, cfg.retriever) if corpus is not None and cfg.retriever.kind == "bm25" else None
    out = Path(cfg.output_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    (out / "transcripts").mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=max(1, cfg.max_concurrency)) as pool:
        records = list(pool.map(lambda t: _run_one(t, cfg, corpus, shared, out), tasks))
    report = aggregate(records)
    emit_report(report, records, out, stream)
    return records, report
