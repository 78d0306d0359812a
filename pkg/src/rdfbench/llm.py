"""Chat-model access, prompt construction and output extraction.

Two providers share one interface: an HTTP client for a chat endpoint and a
deterministic mock that draws from the built-in template library. The mock's
output is a pure function of (seed, request key, prompt text), so identical
runs replay byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

from .graph import SchemaProfile, Term
from .namespaces import DEFAULT_PREFIXES, compact
from .policy import REGISTRY, Category
from .sparql import ASK, SELECT, Count, QueryAst, QueryError, parse_query, serialize
from .sparql.ast import check_ast
from .templates import TemplateSpec, builtin_library, check_template, pin_slots, render_question

TEMPLATE_GEN = "template-gen"
PAIR_GEN = "pair-gen"
REPAIR = "repair"
PROMPT_KINDS = (TEMPLATE_GEN, PAIR_GEN, REPAIR)


class ProviderError(RuntimeError):
    """Transport-level failure talking to a model endpoint; safe to retry."""

    error_class = "provider-error"
    retriable = True


class GenerationExhausted(RuntimeError):
    error_class = "generation-exhausted"


# --------------------------------------------------------------------------
# Prompts


def schema_summary(profile: SchemaProfile) -> str:
    lines = ["Classes and allowed predicates:"]
    for cls, preds in profile.class_predicates.items():
        lines.append(f"- {compact(cls)}: " + ", ".join(compact(p) for p in preds))
    ranges = []
    for kind, pred in profile.slot_predicates.items():
        ranges.append(f"{compact(pred)} -> {compact(profile.slot_types[kind])}")
    numeric = sorted(compact(p) for p in profile.numeric_predicates)
    if numeric:
        ranges.append(", ".join(numeric) + " -> xsd:integer")
    lines.append("Ranges: " + "; ".join(ranges))
    lines.append("Prefixes: " + " ".join(f"{k}: <{v}>" for k, v in DEFAULT_PREFIXES.items()))
    return "\n".join(lines)


@dataclass(frozen=True)
class TargetEntity:
    slot: str
    kind: str
    iri: str
    label: str

    def render(self) -> str:
        return f"- {self.slot}: <{self.iri}> ({self.label})"


_TARGET_RE = re.compile(r"^- ([A-Za-z]+[0-9]*): <([^>]+)> \((.*)\)$", re.M)


def parse_targets(text: str) -> list[TargetEntity]:
    out = []
    for slot, iri, label in _TARGET_RE.findall(text):
        out.append(TargetEntity(slot, slot.rstrip("0123456789"), iri, label))
    return out


@dataclass(frozen=True)
class Prompt:
    kind: str
    category: Category
    task_description: str
    schema_summary: str
    exemplars: tuple[tuple[str, str], ...]
    target: str

    def messages(self) -> list[dict]:
        user = []
        if self.exemplars:
            user.append("Examples:")
            for i, (q, s) in enumerate(self.exemplars, 1):
                user.append(f"Example {i}\nQuestion: {q}\n```sparql\n{s}\n```")
        user.append(self.target)
        system = f"TASK: {self.kind}\nCATEGORY: {self.category.value}\n{self.task_description}\n\n{self.schema_summary}"
        return [
            {"role": "system", "content": system},
            {"role": "user", "content": "\n\n".join(user)},
        ]

    def text(self) -> str:
        return "\n\n".join(m["content"] for m in self.messages())

    @property
    def length(self) -> int:
        return len(self.text())


def _category_line(category: Category) -> str:
    info = REGISTRY[category]
    return f"Category: {info.display} ({info.construct}). Example pattern: {info.example_pattern}"


def build_prompt(
    kind: str,
    profile: SchemaProfile,
    category: Category,
    exemplars: Sequence[tuple[str, str]] = (),
    target: str = "",
    k: Optional[int] = None,
) -> Prompt:
    if kind not in PROMPT_KINDS:
        raise ValueError(f"unknown prompt kind {kind!r}")
    category = Category(category)
    if k is not None and len(exemplars) > k:
        raise ValueError("more exemplars than the retrieval depth")
    head = _category_line(category)
    if kind == TEMPLATE_GEN:
        task = (
            f"{head}\nWrite question templates for this category over the schema below. "
            "Mark slots in the question as {company}, {location}, {person} or {industry} "
            "(append digits for repeated kinds) and use the slot names as SPARQL variables. "
            'Reply with JSON: {"templates": [{"nl": "...", "sparql": "...", "slots": {"slot": "kind"}}]}.'
        )
    elif kind == PAIR_GEN:
        task = (
            f"{head}\nWrite one question of this category about the target entities and a SPARQL query "
            "answering it. Pin each entity with a VALUES clause. Use only the predicates listed below. "
            "Reply with a line 'Question: ...' followed by a ```sparql fenced block."
        )
    else:
        task = (
            f"{head}\nThe SPARQL query below failed validation. Correct its syntax and predicate usage "
            "while keeping the question's intent. Reply with a line 'Question: ...' followed by a "
            "```sparql fenced block."
        )
    return Prompt(kind, category, task, schema_summary(profile), tuple(exemplars), target)


def template_target(n: int, avoid: Sequence[str] = ()) -> str:
    lines = [f"Number of templates: {n}"]
    if avoid:
        lines.append("Do not repeat these templates:")
        lines.extend(f"* {a}" for a in avoid)
    return "\n".join(lines)


def pair_target(entities: Sequence[TargetEntity]) -> str:
    return "Target entities:\n" + "\n".join(e.render() for e in entities)


def repair_target(question: str, sparql: str, diagnostics: Sequence[str]) -> str:
    diag = "\n".join(f"* {d}" for d in diagnostics) or "* unknown failure"
    return f"Question: {question}\nFailing query:\n```sparql\n{sparql}\n```\nDiagnostics:\n{diag}"


# --------------------------------------------------------------------------
# Output extraction


_FENCE_RE = re.compile(r"```(?:sparql|sql)?[ \t]*\n(.*?)```", re.S | re.I)
_QUESTION_RE = re.compile(r"^\s*(?:question|q)\s*:\s*(.+?)\s*$", re.I | re.M)
_LABELED_SPARQL_RE = re.compile(r"^\s*sparql\s*:\s*(.+)", re.I | re.M | re.S)


def extract_pair(text: str) -> Optional[dict]:
    """Best-effort ``{question, sparql}`` from a model reply."""
    q = _QUESTION_RE.search(text)
    fence = _FENCE_RE.search(text)
    if fence:
        sparql = fence.group(1).strip()
    else:
        m = _LABELED_SPARQL_RE.search(text)
        sparql = m.group(1).strip() if m else ""
    if not q or not sparql:
        return None
    return {"question": q.group(1).strip(), "sparql": sparql}


def extract_templates(text: str) -> Optional[list[dict]]:
    fence = re.search(r"```(?:json)?\s*\n(.*?)```", text, re.S)
    body = fence.group(1) if fence else text
    start, end = body.find("{"), body.rfind("}")
    if start < 0 or end <= start:
        return None
    try:
        data = json.loads(body[start:end + 1])
    except json.JSONDecodeError:
        return None
    items = data.get("templates") if isinstance(data, dict) else None
    if not isinstance(items, list):
        return None
    return [t for t in items if isinstance(t, dict)]


# --------------------------------------------------------------------------
# Providers


class ChatProvider(Protocol):
    kind: str
    model_name: str

    def complete(self, messages: list[dict], request_key: str) -> str: ...


class HttpChatProvider:
    """Chat endpoint speaking ``{model, messages, stream: false}`` -> ``{message: {content}}``."""

    kind = "http"

    def __init__(self, endpoint: str, model_name: str, timeout: float = 120.0,
                 path: str = "/api/chat", client=None, options: Optional[dict] = None):
        import httpx

        self.endpoint = endpoint.rstrip("/")
        self.model_name = model_name
        self.timeout = timeout
        self.path = path
        self.options = options or {}
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, messages: list[dict], request_key: str) -> str:
        import httpx

        body = {"model": self.model_name, "messages": messages, "stream": False}
        if self.options:
            body["options"] = self.options
        try:
            resp = self._client.post(self.endpoint + self.path, json=body)
            resp.raise_for_status()
            data = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise ProviderError(f"chat request {request_key} failed: {exc}") from exc
        try:
            return str(data["message"]["content"])
        except (KeyError, TypeError) as exc:
            raise ProviderError(f"chat response for {request_key} lacks message.content") from exc


# Off-whitelist replacements used by schema faults and undone by mock repair.
SCHEMA_FAULTS = {
    "dbo:location": "dbo:headquarter",
    "dbo:numberOfEmployees": "dbo:employees",
    "dbo:keyPerson": "dbo:ceo",
    "dbo:industry": "dbo:sector",
    "dbo:foundingYear": "dbo:founded",
}
_REVERSE_FAULTS = {v: k for k, v in SCHEMA_FAULTS.items()}

BAD_SLOT_KIND = "product"


@dataclass
class TranscriptEntry:
    key: str
    kind: str
    fault: bool
    fault_mode: Optional[str] = None
    variant: Optional[str] = None

    def to_dict(self) -> dict:
        return {"key": self.key, "kind": self.kind, "fault": self.fault,
                "fault_mode": self.fault_mode, "variant": self.variant}


def _rng(seed: int, key: str, content: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}\x1f{key}\x1f{content}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


_TASK_RE = re.compile(r"^TASK: (\S+)$", re.M)
_CATEGORY_RE = re.compile(r"^CATEGORY: (\S+)$", re.M)
_COUNT_RE = re.compile(r"^Number of templates: (\d+)$", re.M)
_AVOID_RE = re.compile(r"^\* (.+)$", re.M)


class MockChatProvider:
    """Deterministic stand-in for a chat model.

    Generation requests fail with probability ``fault_rate``: pair requests
    get a dropped closing brace or an off-whitelist predicate, template
    requests get one template with an unknown slot kind. Repair requests are
    never faulted and undo either pair fault. Non-faulted pairs sometimes come
    back in a non-canonical but valid form (``variant_rate``) so pattern
    enforcement has work to do.
    """

    kind = "mock"

    def __init__(self, seed: int = 42, fault_rate: float = 0.0, variant_rate: float = 0.3,
                 model_name: str = "mock-library", library: Optional[dict] = None):
        if not 0.0 <= fault_rate <= 1.0:
            raise ValueError("fault_rate must lie in [0, 1]")
        self.seed = seed
        self.fault_rate = fault_rate
        self.variant_rate = variant_rate
        self.model_name = model_name
        self.library = library or builtin_library()
        self.transcript: list[TranscriptEntry] = []

    def complete(self, messages: list[dict], request_key: str) -> str:
        content = "\n\n".join(m["content"] for m in messages)
        task = _TASK_RE.search(content)
        cat = _CATEGORY_RE.search(content)
        if not task or not cat:
            raise ProviderError("mock provider cannot read the prompt header")
        kind, category = task.group(1), Category(cat.group(1))
        rng = _rng(self.seed, request_key, content)
        if kind == TEMPLATE_GEN:
            return self._templates(rng, request_key, category, content)
        if kind == PAIR_GEN:
            return self._pair(rng, request_key, category, content)
        if kind == REPAIR:
            return self._repair(request_key, content)
        raise ProviderError(f"mock provider got unknown task {kind!r}")

    # template generation

    def _templates(self, rng, key, category, content) -> str:
        m = _COUNT_RE.search(content)
        n = int(m.group(1)) if m else 1
        avoid = set(_AVOID_RE.findall(content))
        pool = [t for t in self.library[category] if t.nl_pattern not in avoid]
        if not pool:
            pool = list(self.library[category])
        rng.shuffle(pool)
        chosen = [t.to_dict() for t in pool[:n]]
        fault = rng.random() < self.fault_rate and bool(chosen)
        if fault:
            victim = dict(chosen[rng.randrange(len(chosen))])
            slots = dict(victim["slots"]) or {"item": "company"}
            first = next(iter(slots))
            slots[first] = BAD_SLOT_KIND
            victim["slots"] = slots
            chosen = [victim if c["nl"] == victim["nl"] else c for c in chosen]
        self.transcript.append(TranscriptEntry(key, TEMPLATE_GEN, fault, "bad-slot" if fault else None))
        for c in chosen:
            c.pop("template_id", None)
            c.pop("category", None)
        return "```json\n" + json.dumps({"templates": chosen}, indent=2) + "\n```"

    # pair generation

    def _fill(self, tpl: TemplateSpec, palette: dict[str, list[TargetEntity]]) -> Optional[dict[str, TargetEntity]]:
        used: dict[str, int] = {}
        out = {}
        for slot, kind in tpl.slot_types.items():
            options = palette.get(kind, [])
            i = used.get(kind, 0)
            if i >= len(options):
                return None
            out[slot] = options[i]
            used[kind] = i + 1
        return out

    def _pair(self, rng, key, category, content) -> str:
        targets = parse_targets(content)
        palette: dict[str, list[TargetEntity]] = {}
        for t in targets:
            palette.setdefault(t.kind, []).append(t)
        options = list(self.library[category])
        rng.shuffle(options)
        for tpl in options:
            filled = self._fill(tpl, palette)
            if filled is not None:
                break
        else:
            tpl, filled = options[0], None
        if filled is None:
            question = tpl.nl_pattern
            ast = parse_query(tpl.sparql_skeleton)
        else:
            question = render_question(tpl, {s: e.label for s, e in filled.items()})
            ast = pin_slots(parse_query(tpl.sparql_skeleton),
                            {s: Term("iri", e.iri) for s, e in filled.items()})
        variant = None
        if rng.random() < self.variant_rate:
            ast, variant = _non_canonical(ast, category, rng)
        sparql = serialize(ast)
        fault = rng.random() < self.fault_rate
        mode = None
        if fault:
            swappable = [p for p in SCHEMA_FAULTS if re.search(re.escape(p) + r"\b", sparql)]
            if swappable and rng.random() < 0.5:
                pred = swappable[rng.randrange(len(swappable))]
                sparql = re.sub(re.escape(pred) + r"\b", SCHEMA_FAULTS[pred], sparql)
                mode = "schema"
            else:
                sparql = _drop_closing_brace(sparql)
                mode = "syntax"
        self.transcript.append(TranscriptEntry(key, PAIR_GEN, fault, mode, variant))
        return f"Question: {question}\n```sparql\n{sparql}\n```"

    # repair

    def _repair(self, key, content) -> str:
        self.transcript.append(TranscriptEntry(key, REPAIR, False))
        at = content.rfind("Question:")
        parsed = extract_pair(content[at:]) if at >= 0 else None
        if parsed is None:
            return "Question: unknown\n```sparql\nASK { }\n```"
        sparql = parsed["sparql"]
        for bad, good in _REVERSE_FAULTS.items():
            sparql = re.sub(re.escape(bad) + r"\b", good, sparql)
        sparql = _balance_braces(sparql)
        return f"Question: {parsed['question']}\n```sparql\n{sparql}\n```"


def _drop_closing_brace(sparql: str) -> str:
    lines = sparql.split("\n")
    for i in range(len(lines) - 1, -1, -1):
        if lines[i].strip() == "}":
            del lines[i]
            break
    return "\n".join(lines)


def _balance_braces(sparql: str) -> str:
    missing = sparql.count("{") - sparql.count("}")
    if missing <= 0:
        return sparql
    lines = sparql.split("\n")
    at = len(lines)
    for i, line in enumerate(lines):
        if line.startswith(("ORDER BY", "LIMIT")):
            at = i
            break
    return "\n".join(lines[:at] + ["}"] * missing + lines[at:])


def _non_canonical(ast: QueryAst, category: Category, rng: random.Random) -> tuple[QueryAst, Optional[str]]:
    """A valid but non-canonical variant of ``ast`` for the category."""
    if category is Category.YESNO and ast.form == ASK:
        var = next(iter(ast.outer_variables()), None)
        if var is None:
            return ast, None
        return check_ast(ast.replace(form=SELECT, projection=(var,))), "select-for-yesno"
    if category is Category.COUNTING and ast.aggregates:
        proj = tuple(Count(p.var, p.alias, False) if isinstance(p, Count) else p for p in ast.projection)
        return ast.replace(projection=proj), "count-without-distinct"
    if category in (Category.SUPERLATIVE, Category.ORDINAL) and len(ast.order_keys) >= 2:
        return ast.replace(order_keys=ast.order_keys[:-1]), "no-tie-break"
    if category in (Category.GENERIC, Category.MULTIHOP, Category.INTERSECTION, Category.DIFFERENCE):
        if ast.distinct and rng.random() < 0.5:
            return ast.replace(distinct=False), "no-distinct"
        if ast.limit is not None:
            return ast.replace(limit=None), "no-limit"
    if category is Category.COMPARATIVE and ast.limit is not None:
        return ast.replace(limit=None), "no-limit"
    return ast, None


# --------------------------------------------------------------------------
# Operations


@dataclass
class GenOutput:
    raw_text: str
    parsed: Optional[dict]
    llm_ms: float
    prompt_len: int
    request_key: str
    templates: list[TemplateSpec] = field(default_factory=list)


def _call(provider, prompt: Prompt, key: str) -> tuple[str, float]:
    start = time.perf_counter()
    text = provider.complete(prompt.messages(), key)
    return text, (time.perf_counter() - start) * 1000.0


@dataclass
class TemplateBatch:
    templates: list[TemplateSpec]
    diagnostics: list[str]
    llm_ms: float
    prompt_len: int
    calls: int


def generate_templates(
    category: Category,
    n: int,
    provider,
    profile: SchemaProfile,
    key_prefix: str,
    avoid: Sequence[str] = (),
    retry_budget: int = 3,
    id_prefix: Optional[str] = None,
) -> TemplateBatch:
    """Ask for ``n`` templates, dropping invalid ones and re-asking for the rest."""
    if n < 1:
        raise ValueError("n must be >= 1")
    category = Category(category)
    got: list[TemplateSpec] = []
    diagnostics: list[str] = []
    seen = set(avoid)
    llm_ms = 0.0
    prompt_len = 0
    calls = 0
    while len(got) < n and calls <= retry_budget:
        need = n - len(got)
        prompt = build_prompt(TEMPLATE_GEN, profile, category, target=template_target(need, sorted(seen)))
        text, ms = _call(provider, prompt, f"{key_prefix}:tpl{calls}")
        calls += 1
        llm_ms += ms
        prompt_len = max(prompt_len, prompt.length)
        items = extract_templates(text)
        if items is None:
            diagnostics.append("template-output-unparseable")
            continue
        for item in items:
            if len(got) >= n:
                break
            try:
                tid = f"{id_prefix or category.value}-{len(got) + 1:02d}"
                tpl = TemplateSpec.from_dict(item, template_id=tid, category=category)
                check_template(tpl, profile)
            except (KeyError, TypeError, ValueError) as exc:
                diagnostics.append(f"template-dropped: {exc}")
                continue
            if tpl.nl_pattern in seen:
                diagnostics.append(f"template-duplicate: {tpl.nl_pattern}")
                continue
            seen.add(tpl.nl_pattern)
            got.append(tpl)
    if len(got) < n:
        raise GenerationExhausted(
            f"{category.value}: {len(got)} of {n} templates after {calls} calls ({'; '.join(diagnostics[-3:])})"
        )
    return TemplateBatch(got, diagnostics, llm_ms, prompt_len, calls)


def generate_pair(category: Category, prompt: Prompt, provider, key: str) -> GenOutput:
    if prompt.kind != PAIR_GEN:
        raise ValueError("generate_pair needs a pair-gen prompt")
    text, ms = _call(provider, prompt, key)
    return GenOutput(text, extract_pair(text), ms, prompt.length, key)


def repair_query(
    question: str,
    sparql: str,
    diagnostics: Sequence[str],
    category: Category,
    profile: SchemaProfile,
    provider,
    key: str,
    exemplars: Sequence[tuple[str, str]] = (),
) -> GenOutput:
    prompt = build_prompt(REPAIR, profile, category, exemplars, repair_target(question, sparql, diagnostics))
    text, ms = _call(provider, prompt, key)
    return GenOutput(text, extract_pair(text), ms, prompt.length, key)


def try_parse(sparql: str) -> tuple[Optional[QueryAst], Optional[QueryError]]:
    try:
        return parse_query(sparql), None
    except QueryError as exc:
        return None, exc
