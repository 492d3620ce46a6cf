"""Prompt rendering and language-model invocation with cost accounting.

The remote wire format is the common chat-completion shape; a scripted
mock client (endpoint="mock") makes every pipeline path runnable offline
and deterministically, including the unanswerable-question behavior.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import EmptyCompletion, MissingPlaceholder, ProviderError, ProviderTimeout
from .retrieval import ContextBlock
from .tokens import count_tokens

GROUNDING_SENTENCE = "Do not use your prior knowledge; use only the information provided."
STEP_BY_STEP_SENTENCE = "Think step by step."
BASELINE_TEMPLATE_BODY = (
    "Using the following contextual elements: {context} "
    "respond to the following query: {query}"
)
NO_ANSWER_TEXT = "I don't know."


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str = BASELINE_TEMPLATE_BODY
    grounding: bool = False
    step_by_step: bool = False
    persona: str | None = None
    few_shot: tuple[str, ...] = ()


@dataclass(frozen=True)
class LMConfig:
    endpoint: str = "mock"
    model_id: str = "mock"
    temperature: float = 0.0
    max_output_tokens: int = 512
    price_in: float = 0.0   # currency per 1e6 input tokens
    price_out: float = 0.0  # currency per 1e6 output tokens
    timeout: float = 30.0
    mock_script: str | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.price_in < 0 or self.price_out < 0:
            raise ValueError("prices must be >= 0")


@dataclass(frozen=True)
class GenerationResult:
    answer: str
    input_tokens: int
    output_tokens: int
    latency: float
    cost: float


def render_prompt(tpl: PromptTemplate, context: ContextBlock, query: str) -> str:
    """Substitute context and query into the template body.

    Persona, then few-shot examples, are prepended when present.  The
    step-by-step sentence is appended before the grounding sentence so a
    grounded prompt always ends with the grounding instruction.
    """
    if tpl.body.count("{context}") != 1:
        raise MissingPlaceholder(f"{tpl.template_id}: body must contain {{context}} exactly once")
    if tpl.body.count("{query}") != 1:
        raise MissingPlaceholder(f"{tpl.template_id}: body must contain {{query}} exactly once")
    rendered = tpl.body.replace("{context}", context.text).replace("{query}", query)
    parts = []
    if tpl.persona:
        parts.append(tpl.persona)
    parts.extend(tpl.few_shot)
    parts.append(rendered)
    prompt = "\n".join(parts)
    if tpl.step_by_step:
        prompt += "\n" + STEP_BY_STEP_SENTENCE
    if tpl.grounding:
        prompt += "\n" + GROUNDING_SENTENCE
    return prompt


def compute_cost(input_tokens: int, output_tokens: int, price_in: float, price_out: float) -> float:
    """Linear per-million-token pricing."""
    return input_tokens * price_in / 1e6 + output_tokens * price_out / 1e6


# ---------------------------------------------------------------------------
# Mock client
# ---------------------------------------------------------------------------

_script_cache: dict[tuple[str, int], list[dict]] = {}


def _load_script(path: str | None) -> list[dict]:
    if path is None:
        return []
    key = (path, Path(path).stat().st_mtime_ns)
    cached = _script_cache.get(key)
    if cached is None:
        cached = json.loads(Path(path).read_text(encoding="utf-8"))
        _script_cache[key] = cached
    return cached


def _mock_answer(script: list[dict], prompt: str) -> tuple[str, int | None]:
    for rule in script:
        if rule["match"] in prompt:
            return rule["answer"], rule.get("output_tokens")
    return NO_ANSWER_TEXT, None


# ---------------------------------------------------------------------------
# Generate
# ---------------------------------------------------------------------------

def generate(cfg: LMConfig, prompt: str) -> GenerationResult:
    """Invoke the configured language model on a rendered prompt.

    endpoint="mock" answers from the scripted rule file (first matching
    substring wins, "I don't know." otherwise).  Any other endpoint gets a
    chat-completion POST with one retry on transport errors.
    """
    if not prompt:
        raise ValueError("prompt must be non-empty")
    started = time.perf_counter()

    if cfg.endpoint == "mock":
        answer, scripted_out = _mock_answer(_load_script(cfg.mock_script), prompt)
        input_tokens = count_tokens(prompt)
        output_tokens = scripted_out if scripted_out is not None else count_tokens(answer)
    else:
        payload = {
            "model": cfg.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
        }
        body = _post_with_retry(cfg, payload)
        try:
            answer = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(502, f"malformed completion body: {exc}") from exc
        if not answer:
            raise EmptyCompletion(cfg.endpoint)
        usage = body.get("usage") or {}
        input_tokens = usage.get("prompt_tokens", count_tokens(prompt))
        output_tokens = usage.get("completion_tokens", count_tokens(answer))

    latency = time.perf_counter() - started
    return GenerationResult(
        answer=answer,
        input_tokens=input_tokens,
        output_tokens=output_tokens,
        latency=latency,
        cost=compute_cost(input_tokens, output_tokens, cfg.price_in, cfg.price_out),
    )


def _post_with_retry(cfg: LMConfig, payload: dict) -> dict:
    last_exc: Exception | None = None
    for attempt in range(2):
        try:
            resp = requests.post(cfg.endpoint, json=payload, timeout=cfg.timeout)
        except requests.Timeout as exc:
            last_exc = exc
            continue
        except requests.ConnectionError as exc:
            last_exc = exc
            continue
        if resp.status_code != 200:
            raise ProviderError(resp.status_code, resp.text[:500])
        return resp.json()
    if isinstance(last_exc, requests.Timeout):
        raise ProviderTimeout(f"{cfg.endpoint} after {cfg.timeout}s") from last_exc
    raise ProviderTimeout(f"{cfg.endpoint} unreachable: {last_exc}") from last_exc
