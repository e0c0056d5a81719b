"""Utterance-to-plan mapping via pluggable backends.

Two backends speak the same contract: propose(utterance, api, history) and
return either a plan text in the plan grammar or a structured refusal. All
backend output is funneled through parse_plan_text, so nothing reaches
execution without a type check.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .api import ApiSpec, render_prompt
from .errors import BackendUnavailable, MalformedResponse
from .plan import (
    COUNT_TYPE,
    Malformed,
    ParseOutcome,
    TeachFunction,
    parse_plan_text,
)

STOPWORDS = {
    "the", "a", "an", "in", "on", "to", "at", "with", "and", "then", "can",
    "you", "could", "please", "now", "me", "my", "for", "of", "it", "its",
    "this", "that", "next", "ok", "okay", "lets", "let's", "shot", "some",
    "is", "around", "into", "up", "do", "will", "would", "again",
}

_WORD_RE = re.compile(r"[a-z0-9_']+")


@dataclass(frozen=True)
class Utterance:
    id: str
    text: str
    timestamp_ms: int = 0

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("empty utterance")


@dataclass
class HistoryEntry:
    utterance: Utterance
    outcome: ParseOutcome
    execution_result: Optional[str] = None


@dataclass
class InteractionHistory:
    entries: list[HistoryEntry] = field(default_factory=list)

    def append(self, entry: HistoryEntry) -> None:
        self.entries.append(entry)


@dataclass(frozen=True)
class Proposal:
    plan_text: str


@dataclass(frozen=True)
class Refusal:
    message: str
    surface_verb: Optional[str] = None


BackendResult = Union[Proposal, Refusal]


def plan(u: Utterance, api: ApiSpec, h: InteractionHistory, backend) -> ParseOutcome:
    """p = backend(u, api, h) pushed through the validation firewall."""
    result = backend.propose(u, api, h)
    if isinstance(result, Refusal):
        if result.surface_verb:
            return TeachFunction(result.surface_verb, result.message)
        return Malformed(result.message)
    return parse_plan_text(result.plan_text, api, source_utterance_id=u.id)


def teach_prompt(verb: str) -> str:
    return f"I am not sure how to {verb}; could you teach me?"


# Deterministic backend -------------------------------------------------------


def _words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def snake_upper(surface: str) -> str:
    parts = [w for w in _words(surface) if w not in STOPWORDS]
    return "_".join(parts).upper() or "UNNAMED"


@dataclass
class Lexicon:
    """Verb/noun phrase tables derived from an ApiSpec plus explicit aliases.

    Verb alias values are either a function name or, for phrases written
    with slots like "place {0:ObjectRef} in {1:ObjectRef}", a plan-text
    template filled with the matched noun phrases.
    """
    verbs: dict[str, str] = field(default_factory=dict)
    nouns: dict[str, tuple[str, str]] = field(default_factory=dict)

    @classmethod
    def from_api(cls, api: ApiSpec, aliases: Optional[dict] = None) -> "Lexicon":
        verbs: dict[str, str] = {}
        nouns: dict[str, tuple[str, str]] = {}
        for fn in api.functions:
            verbs[fn.name.replace("_", " ")] = fn.name
        for lit in api.literals:
            nouns[lit.surface()] = (lit.type_name, lit.canonical_name)
            if isinstance(lit.value, str):
                nouns.setdefault(" ".join(_words(lit.value)), (lit.type_name, lit.canonical_name))
        if aliases:
            verbs.update(aliases.get("verbs", {}))
            nouns.update({k: tuple(v) for k, v in aliases.get("nouns", {}).items()})
        return cls(verbs, nouns)


_TEMPLATE_SLOT_RE = re.compile(r"\{(\d+):([A-Za-z]+)\}")
_CLAUSE_SPLIT_RE = re.compile(r";|\band then\b|,\s*then\b|\bthen\b")


class DeterministicBackend:
    """Rule-based stand-in for the LM: deterministic output for identical
    inputs, rebuilt from the live API on every call so taught functions and
    literals are picked up immediately."""

    capability = "deterministic"

    def __init__(self, aliases: Optional[dict] = None):
        self.aliases = aliases or {}

    def propose(self, u: Utterance, api: ApiSpec, h: InteractionHistory) -> BackendResult:
        lexicon = Lexicon.from_api(api, self.aliases)
        clauses = [c for c in (_clean(c) for c in _CLAUSE_SPLIT_RE.split(u.text.lower())) if c]
        if not clauses:
            return Refusal("I did not catch that; could you rephrase?")
        parts = []
        for clause in clauses:
            result = self._propose_clause(clause, api, lexicon)
            if isinstance(result, Refusal):
                return result
            parts.append(result)
        return Proposal("; ".join(parts))

    def _propose_clause(self, clause: str, api: ApiSpec, lexicon: Lexicon):
        templated = self._match_template(clause, lexicon)
        if templated is not None:
            return templated

        verb_phrase, fn_name = _longest_verb(clause, lexicon)
        if verb_phrase is None:
            verb = _unknown_verb(clause, lexicon)
            if verb is None:
                return Refusal("I did not catch that; could you rephrase?")
            return Refusal(teach_prompt(verb), surface_verb=verb)

        fn = api.function(fn_name)
        if fn is None:  # alias points at a not-yet-taught function
            return Refusal(teach_prompt(fn_name), surface_verb=fn_name)
        remainder = clause.replace(verb_phrase, " ", 1)
        items = _extract_items(remainder, lexicon)
        args = []
        for param in fn.params:
            token = _take_item(items, param.types)
            if token is None:
                return Refusal(
                    f"I need a {param.type_text()} for {fn.name}; what should it be?"
                )
            args.append(token)
        return f"{fn.name}({', '.join(args)})"

    def _match_template(self, clause: str, lexicon: Lexicon) -> Optional[str]:
        for phrase, target in lexicon.verbs.items():
            if "{" not in phrase:
                continue
            slot_types = {int(m.group(1)): m.group(2)
                          for m in _TEMPLATE_SLOT_RE.finditer(phrase)}
            pattern = re.escape(phrase)
            for idx in slot_types:
                pattern = pattern.replace(
                    re.escape(f"{{{idx}:{slot_types[idx]}}}"), f"(?P<slot{idx}>.+?)"
                )
            m = re.search(pattern + r"\s*$", clause)
            if not m:
                continue
            fills = {}
            for idx, type_name in slot_types.items():
                fills[str(idx)] = _resolve_noun(m.group(f"slot{idx}"), type_name, lexicon)
            out = target
            for idx, token in fills.items():
                out = out.replace(f"{{{idx}}}", token)
            return out
        return None


def _clean(clause: str) -> str:
    return " ".join(_WORD_RE.findall(clause))


def _longest_verb(clause: str, lexicon: Lexicon) -> tuple[Optional[str], Optional[str]]:
    best: tuple[Optional[str], Optional[str]] = (None, None)
    best_len = 0
    for phrase, fn_name in lexicon.verbs.items():
        if "{" in phrase:
            continue
        if re.search(rf"\b{re.escape(phrase)}\b", clause) and len(phrase) > best_len:
            best = (phrase, fn_name)
            best_len = len(phrase)
    return best


def _unknown_verb(clause: str, lexicon: Lexicon) -> Optional[str]:
    marked = _mark_noun_spans(clause, lexicon)
    for word, is_noun in marked:
        if is_noun or word in STOPWORDS or word.isdigit():
            continue
        return word
    return None


def _mark_noun_spans(clause: str, lexicon: Lexicon) -> list[tuple[str, bool]]:
    words = clause.split()
    flags = [False] * len(words)
    for length in range(4, 0, -1):
        for start in range(0, len(words) - length + 1):
            if any(flags[start:start + length]):
                continue
            phrase = " ".join(words[start:start + length])
            if phrase in lexicon.nouns:
                for k in range(start, start + length):
                    flags[k] = True
    return list(zip(words, flags))


def _resolve_noun(span: str, type_name: str, lexicon: Lexicon) -> str:
    span = _clean(span)
    content = " ".join(w for w in span.split() if w not in STOPWORDS)
    for candidate in (span, content):
        if candidate in lexicon.nouns:
            t, name = lexicon.nouns[candidate]
            return f"{t}.{name}"
    # sub-phrase match (e.g. "the red candy" -> "candy")
    marked = _mark_noun_spans(content, lexicon)
    matched = " ".join(w for w, f in marked if f)
    if matched in lexicon.nouns:
        t, name = lexicon.nouns[matched]
        return f"{t}.{name}"
    return f"{type_name}.{snake_upper(content or span)}"


def _extract_items(text: str, lexicon: Lexicon) -> list[tuple[str, str]]:
    """Ordered (kind, token) items: known nouns, integers, and unknown
    content-word spans, in clause order. kind is a type name or '?'."""
    words = _clean(text).split()
    spans: dict[int, tuple[int, str, str]] = {}  # start -> (length, type, name)
    taken = [False] * len(words)
    for length in range(4, 0, -1):
        for start in range(0, len(words) - length + 1):
            if any(taken[start:start + length]):
                continue
            phrase = " ".join(words[start:start + length])
            if phrase in lexicon.nouns:
                t, name = lexicon.nouns[phrase]
                spans[start] = (length, t, name)
                for k in range(start, start + length):
                    taken[k] = True
    items: list[tuple[str, str]] = []
    i = 0
    while i < len(words):
        if i in spans:
            length, t, name = spans[i]
            items.append((t, f"{t}.{name}"))
            i += length
            continue
        w = words[i]
        if w in STOPWORDS:
            i += 1
            continue
        if w.isdigit():
            items.append((COUNT_TYPE, w))
            i += 1
            continue
        span = [w]
        i += 1
        while i < len(words) and not taken[i] and words[i] not in STOPWORDS \
                and not words[i].isdigit():
            span.append(words[i])
            i += 1
        items.append(("?", " ".join(span)))
    return items


def _take_item(items: list[tuple[str, str]], types: tuple[str, ...]) -> Optional[str]:
    for idx, (kind, token) in enumerate(items):
        if kind in types:
            items.pop(idx)
            return token
        if kind == "?" and any(t != COUNT_TYPE for t in types):
            placeholder_type = next(t for t in types if t != COUNT_TYPE)
            items.pop(idx)
            return f"{placeholder_type}.{snake_upper(token)}"
    return None


# LM wire format --------------------------------------------------------------


def _param_schema(api: ApiSpec, param) -> dict:
    if param.types == (COUNT_TYPE,):
        return {"type": "integer"}
    enum = []
    for t in param.types:
        if t == COUNT_TYPE:
            continue
        enum.extend(f"{t}.{l.canonical_name}" for l in api.literals_of(t))
    return {"type": "string", "enum": enum}


def llm_wire_encode(u: Utterance, api: ApiSpec, h: InteractionHistory,
                    model: str = "", history_char_budget: int = 24000) -> dict:
    tools = []
    for fn in api.functions:
        properties = {p.name: _param_schema(api, p) for p in fn.params}
        tools.append({
            "type": "function",
            "function": {
                "name": fn.name,
                "description": fn.docstring,
                "parameters": {
                    "type": "object",
                    "properties": properties,
                    "required": [p.name for p in fn.params],
                },
            },
        })
    messages = [{"role": "system", "content": render_prompt(api)}]
    history_msgs: list[dict] = []
    used = 0
    for entry in reversed(h.entries):
        reply = _history_reply(entry)
        pair = [
            {"role": "user", "content": entry.utterance.text},
            {"role": "assistant", "content": reply},
        ]
        cost = len(entry.utterance.text) + len(reply)
        if used + cost > history_char_budget:
            break  # drop oldest-first: everything before this entry is gone
        history_msgs[:0] = pair
        used += cost
    messages.extend(history_msgs)
    messages.append({"role": "user", "content": u.text})
    return {"model": model, "temperature": 0.2, "messages": messages, "tools": tools}


def _history_reply(entry: HistoryEntry) -> str:
    from .plan import Ok, pretty_print

    if isinstance(entry.outcome, Ok):
        return pretty_print(entry.outcome.ast)
    if isinstance(entry.outcome, TeachFunction):
        return entry.outcome.clarification_message
    if isinstance(entry.outcome, Malformed):
        return entry.outcome.reason
    return "(teaching exchange)"


def llm_wire_decode(response: dict, api: ApiSpec) -> BackendResult:
    try:
        message = response["choices"][0]["message"]
    except (KeyError, IndexError, TypeError) as e:
        raise MalformedResponse(f"no message in response: {e}") from e
    tool_calls = message.get("tool_calls") or []
    if not tool_calls:
        content = message.get("content")
        if not content:
            raise MalformedResponse("response has neither tool calls nor text")
        return Refusal(content, surface_verb=None)
    parts = []
    for call in tool_calls:
        try:
            name = call["function"]["name"]
            raw_args = call["function"].get("arguments") or "{}"
            args = json.loads(raw_args) if isinstance(raw_args, str) else raw_args
        except (KeyError, TypeError, json.JSONDecodeError) as e:
            raise MalformedResponse(f"garbled tool call: {e}") from e
        fn = api.function(name)
        ordered = []
        if fn is not None:
            keys = [p.name for p in fn.params]
        else:
            keys = sorted(args)
        for key in keys:
            if key not in args:
                raise MalformedResponse(f"tool call {name} missing argument {key}")
            ordered.append(_wire_arg_token(args[key], api))
        parts.append(f"{name}({', '.join(ordered)})")
    return Proposal("; ".join(parts))


def _wire_arg_token(value, api: ApiSpec) -> str:
    if isinstance(value, bool):
        raise MalformedResponse(f"bad argument value {value!r}")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        if "." in value:
            return value
        lit = api.literal_named(value)
        if lit is not None:
            return f"{lit.type_name}.{lit.canonical_name}"
        return value  # let the parser report the gap
    raise MalformedResponse(f"bad argument value {value!r}")


class LlmBackend:
    """Chat-completion client speaking the function-calling wire format.

    Endpoint, model, and key come from GATEWAY_LM_URL / GATEWAY_LM_MODEL /
    GATEWAY_LM_KEY unless given explicitly. One retry on a malformed
    response; unreachable or slow endpoints raise BackendUnavailable so the
    session can fall back to the deterministic backend.
    """

    capability = "external"

    def __init__(self, url: Optional[str] = None, model: Optional[str] = None,
                 api_key: Optional[str] = None, timeout_s: float = 10.0,
                 transport=None):
        self.url = url or os.environ.get("GATEWAY_LM_URL", "")
        self.model = model or os.environ.get("GATEWAY_LM_MODEL", "")
        self.api_key = api_key or os.environ.get("GATEWAY_LM_KEY", "")
        self.timeout_s = timeout_s
        self.transport = transport

    def propose(self, u: Utterance, api: ApiSpec, h: InteractionHistory) -> BackendResult:
        if not self.url:
            raise BackendUnavailable("no LM endpoint configured")
        request = llm_wire_encode(u, api, h, model=self.model)
        last_error: Optional[Exception] = None
        for _ in range(2):  # one retry on MalformedResponse
            response = self._post(request)
            try:
                return llm_wire_decode(response, api)
            except MalformedResponse as e:
                last_error = e
        return Refusal(f"the planner response was malformed: {last_error}")

    def _post(self, request: dict) -> dict:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            with httpx.Client(timeout=self.timeout_s, transport=self.transport) as client:
                resp = client.post(self.url, json=request, headers=headers)
                resp.raise_for_status()
                return resp.json()
        except httpx.HTTPError as e:
            raise BackendUnavailable(str(e)) from e
