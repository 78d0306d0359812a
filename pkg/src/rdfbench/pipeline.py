"""Three-phase benchmark construction.

Phase 1 asks for templates, grounds them by reverse querying and keeps the
validated instantiations as seeds. Phase 2 generates retrieval-augmented pairs
per category against the Phase-1 pool and stores the accepted ones as the
seed bank. Phase 3 generates the balanced benchmark against that bank.

Every candidate passes the same validation chain: parse, schema, category
enforcement, execution, guards, dedup. The first four failures route to the
repair prompt until the repair budget is spent; guard failures on retrieval
self-reference and duplicates are rejected outright.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Sequence

from .config import RunConfig
from .graph import IRI, Graph, SchemaProfile, Term, label_of
from .llm import (
    PAIR_GEN,
    GenerationExhausted,
    HttpChatProvider,
    MockChatProvider,
    ProviderError,
    TargetEntity,
    build_prompt,
    generate_pair,
    generate_templates,
    pair_target,
    repair_query,
)
from .namespaces import RDF_TYPE
from .policy import (
    REGISTRY,
    Category,
    UnenforceableError,
    answer_type,
    enforce_category_pattern,
    guard_checks,
    sorted_tags,
    tag_strategies,
    validate_schema,
)
from .records import ACCEPTED, REJECTED, BenchmarkRecord, write_csv, write_jsonl
from .retrieval import (
    CachedEmbeddingProvider,
    DedupIndex,
    HttpEmbeddingProvider,
    MockEmbeddingProvider,
    SeedBank,
    SeedExample,
)
from .sparql import ASK, ExecutionTimeout, QueryAst, QueryError, complexity_metrics, evaluate, parse_query, serialize
from .templates import TemplateError, TemplateSpec, UnlabeledEntity, instantiate, reverse_query_ast, skeleton_ask


class BalanceError(RuntimeError):
    error_class = "balance-failure"

    def __init__(self, deficits: dict[str, int]):
        listing = ", ".join(f"{c} ({n} short)" for c, n in deficits.items())
        super().__init__(f"Phase 3 could not balance categories: {listing}")
        self.deficits = deficits


# --------------------------------------------------------------------------
# Logging


class RunLog:
    """Line-oriented event log: ``<utc timestamp>\\t<event>\\t<json fields>``."""

    def __init__(self, path: Optional[Path] = None, echo: Optional[Callable[[str], None]] = None):
        self.path = path
        self.echo = echo
        self.lines: list[str] = []
        self._fh = path.open("a", encoding="utf-8") if path else None

    def event(self, name: str, **fields) -> None:
        stamp = datetime.now(timezone.utc).isoformat(timespec="milliseconds")
        line = f"{stamp}\t{name}\t{json.dumps(fields, ensure_ascii=False, sort_keys=True, default=str)}"
        self.lines.append(line)
        if self._fh:
            self._fh.write(line + "\n")
            self._fh.flush()
        if self.echo:
            self.echo(line)

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None


# --------------------------------------------------------------------------
# Providers


def make_chat_provider(cfg: RunConfig):
    p = cfg.provider
    if p.kind == "mock":
        return MockChatProvider(seed=cfg.seed, fault_rate=p.fault_rate, variant_rate=p.variant_rate)
    return HttpChatProvider(p.endpoint, p.model, timeout=p.timeout, path=p.path, options={"seed": cfg.seed})


def make_embedding_provider(cfg: RunConfig, cache_dir: Optional[Path] = None):
    e = cfg.embedding
    if e.kind == "mock":
        return MockEmbeddingProvider(e.dim)
    inner = HttpEmbeddingProvider(e.endpoint, e.model, timeout=e.timeout, path=e.path)
    if e.cache and cache_dir is not None:
        return CachedEmbeddingProvider(inner, cache_dir / "embeddings.jsonl")
    return inner


# --------------------------------------------------------------------------
# Reverse querying


def reverse_query_for_template(
    tpl: TemplateSpec, graph: Graph, profile: SchemaProfile, cfg: RunConfig
) -> tuple[list[dict[str, Term]], Optional[str]]:
    """Distinct slot bindings satisfying ``tpl``, and a stall reason when there are none.

    Raises TemplateError when the skeleton is invalid.
    """
    rq = reverse_query_ast(tpl, profile, cfg.reverse_row_cap)
    try:
        if rq is None:
            res, _ = evaluate(skeleton_ask(tpl, profile), graph, timeout=cfg.reverse_timeout)
            rows: list[dict[str, Term]] = [{}] if res.boolean else []
        else:
            res, _ = evaluate(rq, graph, timeout=cfg.reverse_timeout)
            rows = [dict(zip(res.columns, row)) for row in res.rows if all(t is not None for t in row)]
    except ExecutionTimeout:
        return [], "reverse-timeout"
    return rows, (None if rows else "no-bindings")


# --------------------------------------------------------------------------
# Validation


@dataclass
class Check:
    stage: Optional[str]  # first failing stage or None
    diagnostics: list[str]
    ast: Optional[QueryAst] = None
    parse_ok: bool = False
    exec_ok: bool = False
    result: object = None
    exec_ms: float = 0.0
    rewrites: list[str] = field(default_factory=list)
    guards: list[str] = field(default_factory=list)
    repairable: bool = True

    @property
    def valid(self) -> bool:
        """Parsed, schema-clean, enforceable and executed."""
        return self.exec_ok


@dataclass
class Candidate:
    phase: int
    category: Category
    record_id: str
    template_id: str
    question: str
    sparql: str
    llm_ms: float = 0.0
    prompt_len: int = 0
    retrieval_scores: list[float] = field(default_factory=list)
    retrieved: list[tuple[str, str]] = field(default_factory=list)
    used_retrieval: bool = False
    entities: dict[str, str] = field(default_factory=dict)
    request_key: str = ""
    extracted: bool = True


class Pipeline:
    def __init__(
        self,
        graph: Graph,
        profile: SchemaProfile,
        cfg: RunConfig,
        chat=None,
        embedder=None,
        log: Optional[RunLog] = None,
    ):
        self.graph = graph
        self.profile = profile
        self.cfg = cfg
        self.chat = chat if chat is not None else make_chat_provider(cfg)
        self.embedder = embedder if embedder is not None else make_embedding_provider(cfg)
        self.log = log or RunLog()
        self.dedup = DedupIndex(cfg.dedup_threshold)
        self.records: dict[int, list[BenchmarkRecord]] = {1: [], 2: [], 3: []}
        self.rejected: dict[int, list[BenchmarkRecord]] = {1: [], 2: [], 3: []}
        self.llm_overhead_ms: dict[int, float] = {1: 0.0, 2: 0.0, 3: 0.0}
        self.banks: dict[int, SeedBank] = {}
        self._counters: dict[tuple[int, str], int] = {}
        self._entity_pools: Optional[dict[str, list[Term]]] = None
        self.categories = [Category(c) for c in cfg.categories] or list(Category)

    # -- bookkeeping

    def _next_id(self, phase: int, category: Category) -> tuple[str, int]:
        key = (phase, category.value)
        n = self._counters.get(key, 0)
        self._counters[key] = n + 1
        return f"p{phase}-{category.value}-{n:04d}", n

    def seed_dedup(self, questions: Sequence[str]) -> None:
        for q in questions:
            self.dedup.add(q)

    # -- validation chain

    def check(self, category: Category, question: str, sparql: str,
              retrieved_questions: Sequence[str]) -> Check:
        diags: list[str] = []
        try:
            ast = parse_query(sparql)
        except QueryError as exc:
            return Check("parse", [f"{exc.error_class}: {exc}"])
        violations = validate_schema(ast, self.profile)
        if violations:
            return Check("schema", [f"schema: {v.message}" for v in violations], ast=ast, parse_ok=True)
        rewrites: list[str] = []
        if self.cfg.enforce_patterns:
            try:
                ast, log = enforce_category_pattern(ast, category, self.profile, self.cfg.result_cap)
                rewrites = [r.kind for r in log]
            except (UnenforceableError, QueryError) as exc:
                return Check("enforce", [f"unenforceable: {exc}"], ast=ast, parse_ok=True)
        try:
            result, metrics = evaluate(ast, self.graph, timeout=self.cfg.exec_timeout, max_rows=self.cfg.result_cap)
        except ExecutionTimeout as exc:
            return Check("execute", [f"execution-timeout: {exc}"], ast=ast, parse_ok=True, rewrites=rewrites)
        diags.extend(metrics.diagnostics[:5])
        chk = Check(None, diags, ast=ast, parse_ok=True, exec_ok=True, result=result,
                    exec_ms=metrics.exec_ms, rewrites=rewrites)
        shell = _GuardView(category.value, question, answer_type(result, ast))
        violations_g = guard_checks(shell, retrieved_questions, self.cfg.dedup_threshold,
                                    self.cfg.enforce_patterns, ast)
        if violations_g:
            chk.guards = [g.guard for g in violations_g]
            chk.stage = "guard"
            chk.diagnostics.extend(f"guard {g.guard}: {g.message}" for g in violations_g)
            chk.repairable = all(g.repairable for g in violations_g)
            return chk
        if self.dedup.is_duplicate(question):
            chk.stage = "dedup"
            chk.repairable = False
            _, near = self.dedup.nearest(question)
            chk.diagnostics.append(f"duplicate: {near}")
        return chk

    def validate_and_repair(self, cand: Candidate) -> BenchmarkRecord:
        question, sparql = cand.question, cand.sparql
        llm_ms = cand.llm_ms
        attempts = 0
        if cand.extracted:
            chk = self.check(cand.category, question, sparql, [q for q, _ in cand.retrieved])
        else:
            chk = Check("extract", ["model reply had no question and SPARQL block"])
        pre_valid = chk.valid
        while chk.stage is not None and chk.repairable and attempts < self.cfg.repair_budget:
            attempts += 1
            key = f"{cand.request_key or cand.record_id}:repair{attempts}"
            self.log.event("repair", id=cand.record_id, attempt=attempts, stage=chk.stage,
                           diagnostics=chk.diagnostics[:3])
            out = self._with_retries(lambda: repair_query(
                question, sparql, chk.diagnostics, cand.category, self.profile, self.chat, key,
                exemplars=cand.retrieved,
            ))
            llm_ms += out.llm_ms
            if out.parsed is None:
                chk = Check("extract", ["repair reply had no question and SPARQL block"])
                continue
            question, sparql = out.parsed["question"], out.parsed["sparql"]
            chk = self.check(cand.category, question, sparql, [q for q, _ in cand.retrieved])

        accepted = chk.stage is None
        rec = BenchmarkRecord(
            id=cand.record_id,
            phase=cand.phase,
            category=cand.category.value,
            template_id=cand.template_id,
            question=question,
            sparql=serialize(chk.ast) if (chk.ast is not None and chk.parse_ok) else sparql,
            parse_ok=chk.parse_ok,
            exec_ok=chk.exec_ok,
            repair_attempts=attempts,
            pre_repair_valid=pre_valid,
            llm_ms=round(llm_ms, 3),
            exec_ms=round(chk.exec_ms, 3),
            prompt_len=cand.prompt_len,
            question_len=len(question),
            retrieval_scores=[round(s, 6) for s in cand.retrieval_scores],
            guard_violations=list(chk.guards),
            entities=dict(cand.entities),
            rewrites=list(chk.rewrites),
            status=ACCEPTED if accepted else REJECTED,
            diagnostics=list(chk.diagnostics),
        )
        if chk.ast is not None and chk.parse_ok:
            cm = complexity_metrics(chk.ast)
            rec.triple_count, rec.filter_count = cm.triple_count, cm.filter_count
            rec.uses_count, rec.uses_order = cm.uses_count, cm.uses_order
            rec.strategy_tags = sorted_tags(tag_strategies(chk.ast, cand.used_retrieval))
        if chk.exec_ok:
            res = chk.result
            if res.kind == "boolean":
                rec.answer_count = 1 if res.boolean else 0
            else:
                rec.answer_count = len(res.rows)
            rec.empty = rec.answer_count == 0
            rec.answer_type = answer_type(res, chk.ast)
        if accepted:
            self.dedup.add(question)
            self.records[cand.phase].append(rec)
        else:
            if chk.stage == "dedup":
                rec.failure = "duplicate"
            elif chk.stage == "guard" and not chk.repairable:
                rec.failure = "retrieval-self-reference"
            else:
                rec.failure = "irreparable"
            rec.diagnostics.insert(0, f"failed-stage: {chk.stage}")
            self.rejected[cand.phase].append(rec)
        self.log.event("candidate", id=rec.id, status=rec.status, failure=rec.failure,
                       repairs=attempts, pre_repair_valid=pre_valid)
        if self.cfg.paraphrase and accepted:
            paraphrase_hook(rec)
        return rec

    def _with_retries(self, fn):
        last: Optional[Exception] = None
        for attempt in range(self.cfg.provider.max_retries + 1):
            try:
                return fn()
            except ProviderError as exc:
                last = exc
                self.log.event("provider-retry", attempt=attempt, error=str(exc))
        assert last is not None
        raise last

    # -- phase 1

    def phase1(self) -> list[BenchmarkRecord]:
        cfg = self.cfg
        self.log.event("phase-start", phase=1)
        for category in self.categories:
            key_prefix = f"p1:{category.value}"
            try:
                batch = self._with_retries(lambda: generate_templates(
                    category, cfg.templates_per_category, self.chat, self.profile, key_prefix,
                    retry_budget=cfg.template_retry_budget, id_prefix=f"{category.value}-t",
                ))
            except GenerationExhausted as exc:
                self.log.event("warning", phase=1, category=category.value, message=str(exc))
                continue
            for d in batch.diagnostics:
                self.log.event("template-diagnostic", category=category.value, detail=d)
            used = [t.nl_pattern for t in batch.templates]
            pending_ms = batch.llm_ms
            yielded_before = len(self.records[1])
            next_tid = len(batch.templates) + 1
            for slot, tpl in enumerate(batch.templates):
                stalls = 0
                current = tpl
                while True:
                    n_ok, pending_ms = self._ground(current, category, batch.prompt_len, pending_ms, stalls)
                    if n_ok > 0:
                        break
                    stalls += 1
                    self.log.event("stall", category=category.value, template=current.template_id, stalls=stalls)
                    if stalls >= cfg.stall_limit:
                        self.log.event("template-abort", category=category.value, template=current.template_id)
                        break
                    try:
                        regen = self._with_retries(lambda: generate_templates(
                            category, 1, self.chat, self.profile, f"{key_prefix}:s{slot}:r{stalls}",
                            avoid=used, retry_budget=cfg.template_retry_budget,
                            id_prefix=f"{category.value}-t{next_tid:02d}",
                        ))
                    except GenerationExhausted as exc:
                        self.log.event("template-abort", category=category.value, reason=str(exc))
                        break
                    pending_ms += regen.llm_ms
                    current = TemplateSpec(f"{category.value}-t{next_tid:02d}", category,
                                           regen.templates[0].nl_pattern, regen.templates[0].sparql_skeleton,
                                           regen.templates[0].slot_types)
                    next_tid += 1
                    used.append(current.nl_pattern)
            self.llm_overhead_ms[1] += pending_ms
            if len(self.records[1]) == yielded_before:
                self.log.event("warning", phase=1, category=category.value, message="no seeds accepted")
        self.log.event("phase-end", phase=1, accepted=len(self.records[1]), rejected=len(self.rejected[1]))
        return self.records[1]

    def _ground(self, tpl: TemplateSpec, category: Category, prompt_len: int,
                pending_ms: float, attempt: int) -> tuple[int, float]:
        """Reverse-query ``tpl`` and validate up to seeds_per_template instantiations."""
        try:
            bindings, reason = reverse_query_for_template(tpl, self.graph, self.profile, self.cfg)
        except TemplateError as exc:
            self.log.event("template-rejected", template=tpl.template_id, reason=str(exc))
            return 0, pending_ms
        if reason:
            self.log.event("reverse-query", template=tpl.template_id, rows=0, reason=reason)
            return 0, pending_ms
        self.log.event("reverse-query", template=tpl.template_id, rows=len(bindings))
        rng = random.Random(f"{self.cfg.seed}:p1:{tpl.template_id}:{attempt}")
        rng.shuffle(bindings)
        accepted = 0
        for binding in bindings:
            if accepted >= self.cfg.seeds_per_template:
                break
            try:
                question, sparql = instantiate(tpl, binding, self.graph, self.profile)
            except UnlabeledEntity as exc:
                self.log.event("binding-skipped", template=tpl.template_id, reason=str(exc))
                continue
            rid, _ = self._next_id(1, category)
            cand = Candidate(
                phase=1, category=category, record_id=rid, template_id=tpl.template_id,
                question=question, sparql=sparql, llm_ms=pending_ms, prompt_len=prompt_len,
                entities={k: v.value for k, v in binding.items()},
            )
            pending_ms = 0.0
            rec = self.validate_and_repair(cand)
            if rec.status == ACCEPTED:
                accepted += 1
        return accepted, pending_ms

    # -- phases 2 and 3

    def bank_from_records(self, records: Sequence[BenchmarkRecord], phase_of_origin: int) -> SeedBank:
        bank = SeedBank(threshold=self.cfg.dedup_threshold)
        for r in records:
            if r.status != ACCEPTED:
                continue
            try:
                ast = parse_query(r.sparql)
            except QueryError:
                self.log.event("bank-skip", id=r.id, reason="sparql does not parse")
                continue
            if validate_schema(ast, self.profile):
                self.log.event("bank-skip", id=r.id, reason="schema violation")
                continue
            ex = SeedExample(r.question, r.sparql, Category(r.category), self.embedder.embed(r.question),
                             phase_of_origin, record_id=r.id)
            if not bank.add(ex):
                self.log.event("bank-skip", id=r.id, reason="near-duplicate")
        return bank

    def _entity_pool(self) -> dict[str, list[Term]]:
        if self._entity_pools is None:
            pools: dict[str, list[Term]] = {}
            company_cls = IRI(self.profile.slot_types["company"])
            companies = sorted(self.graph.subjects(IRI(RDF_TYPE), company_cls), key=lambda t: t.value)
            pools["company"] = [c for c in companies if label_of(c, self.graph, self.profile)]
            for kind, pred in self.profile.slot_predicates.items():
                seen = {o: None for _, _, o in self.graph.match(None, IRI(pred), None) if o.is_iri}
                ordered = sorted(seen, key=lambda t: t.value)
                pools[kind] = [t for t in ordered if label_of(t, self.graph, self.profile)]
            self._entity_pools = pools
        return self._entity_pools

    def palette(self, rng: random.Random) -> list[TargetEntity]:
        """Two labelled entities per slot kind, the first ones linked to the first company when possible."""
        pools = self._entity_pool()
        out: list[TargetEntity] = []
        companies = pools.get("company", [])
        if len(companies) < 2:
            return out
        c1, c2 = rng.sample(companies, 2)
        picked: dict[str, list[Term]] = {"company": [c1, c2]}
        for kind, pred in self.profile.slot_predicates.items():
            pool = pools.get(kind, [])
            if len(pool) < 2:
                continue
            linked = [o for o in self.graph.objects(c1, IRI(pred)) if o in set(pool)]
            if linked and rng.random() < 0.5:
                first = linked[rng.randrange(len(linked))]
            else:
                first = pool[rng.randrange(len(pool))]
            second = first
            while second == first:
                second = pool[rng.randrange(len(pool))]
            picked[kind] = [first, second]
        for kind in ("company", "location", "industry", "person"):
            for i, term in enumerate(picked.get(kind, []), 1):
                label = label_of(term, self.graph, self.profile) or term.value
                out.append(TargetEntity(f"{kind}{i}", kind, term.value, label))
        return out

    def _generation_phase(self, phase: int, bank: SeedBank, target: int, hard: bool) -> list[BenchmarkRecord]:
        cfg = self.cfg
        self.log.event("phase-start", phase=phase, target_per_category=target)
        out_bank = SeedBank(threshold=cfg.dedup_threshold)
        deficits: dict[str, int] = {}
        for category in self.categories:
            info = REGISTRY[category]
            accepted = 0
            budget = target * cfg.candidate_budget_factor
            tried = 0
            while accepted < target and tried < budget:
                rid, n = self._next_id(phase, category)
                tried += 1
                key = f"p{phase}:{category.value}:{n}"
                rng = random.Random(f"{cfg.seed}:{key}")
                entities = self.palette(rng)
                query_text = f"{info.display} question about " + ", ".join(e.label for e in entities)
                retrieval = None
                exemplars: list[tuple[str, str]] = []
                if bank.entries[category]:
                    retrieval = bank.top_k(self.embedder.embed(query_text), category, cfg.retrieval_k)
                    exemplars = [(e.question, e.sparql) for e, _ in retrieval.hits]
                    if retrieval.shortage:
                        self.log.event("retrieval-shortage", id=rid, available=len(retrieval.hits),
                                       k=cfg.retrieval_k)
                prompt = build_prompt(PAIR_GEN, self.profile, category, exemplars, pair_target(entities),
                                      k=cfg.retrieval_k)
                out = self._with_retries(lambda: generate_pair(category, prompt, self.chat, key))
                parsed = out.parsed or {}
                cand = Candidate(
                    phase=phase, category=category, record_id=rid, template_id="llm",
                    question=parsed.get("question", ""), sparql=parsed.get("sparql", out.raw_text),
                    llm_ms=out.llm_ms, prompt_len=out.prompt_len,
                    retrieval_scores=retrieval.scores if retrieval else [],
                    retrieved=exemplars, used_retrieval=bool(exemplars),
                    entities={e.slot: e.iri for e in entities}, request_key=key,
                    extracted=out.parsed is not None,
                )
                rec = self.validate_and_repair(cand)
                if rec.status == ACCEPTED:
                    accepted += 1
                    out_bank.add(SeedExample(rec.question, rec.sparql, category,
                                             self.embedder.embed(rec.question), phase, record_id=rec.id))
            if accepted < target:
                deficits[category.value] = target - accepted
                self.log.event("warning", phase=phase, category=category.value,
                               message=f"accepted {accepted} of {target} after {tried} candidates")
        self.banks[phase] = out_bank
        self.log.event("phase-end", phase=phase, accepted=len(self.records[phase]),
                       rejected=len(self.rejected[phase]))
        if hard and deficits:
            raise BalanceError(deficits)
        return self.records[phase]

    def phase2(self, pool: SeedBank) -> SeedBank:
        self._generation_phase(2, pool, self.cfg.phase2_seeds_per_category, hard=False)
        return self.banks[2]

    def phase3(self, bank: SeedBank) -> list[BenchmarkRecord]:
        return self._generation_phase(3, bank, self.cfg.phase3_targets_per_category, hard=True)


@dataclass(frozen=True)
class _GuardView:
    category: str
    question: str
    answer_type: str


def paraphrase_hook(record: BenchmarkRecord) -> BenchmarkRecord:
    """Paraphrase augmentation is disabled in this build; records pass through unchanged."""
    return record


# --------------------------------------------------------------------------
# Review edits


class ReviewError(ValueError):
    error_class = "review-error"


def apply_review(records: list[BenchmarkRecord], edits: list[dict]) -> tuple[list[BenchmarkRecord], list[str]]:
    """Apply accept/reject/replace edits keyed by record id."""
    by_id = {r.id: r for r in records}
    log = []
    rejected: set[str] = set()
    for e in edits:
        rid, action = e.get("id"), e.get("action")
        if rid not in by_id:
            raise ReviewError(f"edit names unknown record id {rid!r}")
        if action == "accept":
            log.append(f"accept {rid}")
        elif action == "reject":
            rejected.add(rid)
            log.append(f"reject {rid}")
        elif action == "replace":
            rec = by_id[rid]
            if "question" in e:
                rec.question = e["question"]
                rec.question_len = len(rec.question)
            if "sparql" in e:
                rec.sparql = e["sparql"]
            rec.diagnostics = rec.diagnostics + ["reviewed: replaced"]
            log.append(f"replace {rid}")
        else:
            raise ReviewError(f"unknown review action {action!r} for {rid}")
    return [r for r in records if r.id not in rejected], log


def read_edits(path: Path | str) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# --------------------------------------------------------------------------
# Run orchestration


def new_run_dir(base: Path | str, name: str) -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    path = Path(base) / f"{name}_{stamp}"
    path.mkdir(parents=True, exist_ok=False)
    return path


@dataclass
class RunResult:
    run_dir: Path
    records: dict[int, list[BenchmarkRecord]]
    rejected: dict[int, list[BenchmarkRecord]]
    summary: dict


def run_pipeline(
    cfg: RunConfig,
    graph: Graph,
    profile: SchemaProfile,
    run_dir: Path,
    phases: Sequence[int] = (1, 2, 3),
    from_run: Optional[Path] = None,
    chat=None,
    embedder=None,
    echo: Optional[Callable[[str], None]] = None,
) -> RunResult:
    """Run the requested phases and write all artifacts into ``run_dir``."""
    from .analysis import write_reports

    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    log = RunLog(run_dir / "run.log", echo=echo)
    if embedder is None:
        embedder = make_embedding_provider(cfg, cache_dir=run_dir.parent / ".cache")
    pipe = Pipeline(graph, profile, cfg, chat=chat, embedder=embedder, log=log)
    log.event("run-start", config=cfg.to_dict(), phases=list(phases), from_run=str(from_run) if from_run else None)
    started = time.perf_counter()
    failure: Optional[Exception] = None
    try:
        prior: dict[int, list[BenchmarkRecord]] = {}
        if from_run is not None:
            from .records import read_jsonl

            for ph in (1, 2):
                path = Path(from_run) / f"phase{ph}.jsonl"
                if path.exists():
                    prior[ph] = read_jsonl(path)
                    pipe.seed_dedup([r.question for r in prior[ph]])
        if 1 in phases:
            pipe.phase1()
            _review(pipe, cfg.phase1_review, 1, log)
            prior[1] = pipe.records[1]
        if 2 in phases:
            pool = pipe.bank_from_records(prior.get(1, []), 1)
            pipe.phase2(pool)
            _review(pipe, cfg.phase2_review, 2, log)
            prior[2] = pipe.records[2]
        if 3 in phases:
            bank = pipe.bank_from_records(prior.get(2, []), 2)
            pipe.phase3(bank)
    except BalanceError as exc:
        failure = exc
    finally:
        for ph in phases:
            write_jsonl(run_dir / f"phase{ph}.jsonl", pipe.records[ph])
            write_csv(run_dir / f"phase{ph}.csv", pipe.records[ph])
            write_jsonl(run_dir / f"phase{ph}_rejected.jsonl", pipe.rejected[ph])
        all_records = [r for ph in phases for r in pipe.records[ph]]
        write_jsonl(run_dir / "pipeline_records.jsonl", all_records)
        if 2 in phases and 2 in pipe.banks:
            pipe.banks[2].save(run_dir / "seed_banks")
        transcript = getattr(pipe.chat, "transcript", None)
        if transcript is not None:
            with (run_dir / "transcript.jsonl").open("w", encoding="utf-8") as fh:
                for entry in transcript:
                    fh.write(json.dumps(entry.to_dict()) + "\n")
        summary = write_reports(
            run_dir,
            {ph: pipe.records[ph] for ph in phases},
            {ph: pipe.rejected[ph] for ph in phases},
            extra={
                "run_dir": str(run_dir),
                "phases": list(phases),
                "seed": cfg.seed,
                "wall_s": round(time.perf_counter() - started, 3),
                "llm_overhead_ms": {str(ph): round(pipe.llm_overhead_ms[ph], 3) for ph in phases},
                "failure": str(failure) if failure else None,
            },
        )
        log.event("run-end", failure=str(failure) if failure else None)
        log.close()
    if failure is not None:
        raise failure
    return RunResult(run_dir, pipe.records, pipe.rejected, summary)


def _review(pipe: Pipeline, path: Optional[str], phase: int, log: RunLog) -> None:
    if not path:
        return
    kept, entries = apply_review(pipe.records[phase], read_edits(path))
    pipe.records[phase] = kept
    for entry in entries:
        log.event("review", phase=phase, action=entry)
