from __future__ import annotations

import pytest

from ragkit.errors import MissingPlaceholder, ProviderTimeout
from ragkit.generation import (
    BASELINE_TEMPLATE_BODY,
    GROUNDING_SENTENCE,
    LMConfig,
    PromptTemplate,
    compute_cost,
    generate,
    render_prompt,
)
from ragkit.retrieval import ContextBlock


def block(text: str) -> ContextBlock:
    from ragkit.tokens import count_tokens

    return ContextBlock(text=text, included_chunk_ids=("c#0",), total_tokens=count_tokens(text))


BASELINE = PromptTemplate("baseline")


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def test_render_baseline_byte_exact():
    rendered = render_prompt(BASELINE, block("X\n-----\nY"), "Q")
    assert rendered == (
        "Using the following contextual elements: X\n-----\nY "
        "respond to the following query: Q"
    )


def test_render_grounding_appended_byte_exact():
    tpl = PromptTemplate("grounded", grounding=True)
    rendered = render_prompt(tpl, block("X\n-----\nY"), "Q")
    base = render_prompt(BASELINE, block("X\n-----\nY"), "Q")
    assert rendered == base + "\n" + GROUNDING_SENTENCE
    assert rendered.endswith(GROUNDING_SENTENCE)


def test_render_grounding_last_even_with_step_by_step():
    tpl = PromptTemplate("both", grounding=True, step_by_step=True)
    rendered = render_prompt(tpl, block("C"), "Q")
    assert rendered.endswith(GROUNDING_SENTENCE)
    assert "Think step by step." in rendered


def test_render_empty_query_substitutes():
    rendered = render_prompt(BASELINE, block("C"), "")
    assert rendered == BASELINE_TEMPLATE_BODY.replace("{context}", "C").replace("{query}", "")


def test_render_persona_and_few_shot_prepended_in_order():
    tpl = PromptTemplate(
        "rich",
        persona="You are a lab assistant.",
        few_shot=("Q: a A: b", "Q: c A: d"),
    )
    rendered = render_prompt(tpl, block("C"), "Q")
    assert rendered.startswith("You are a lab assistant.\nQ: a A: b\nQ: c A: d\n")


def test_render_missing_placeholder():
    with pytest.raises(MissingPlaceholder):
        render_prompt(PromptTemplate("bad", body="no slots"), block("C"), "Q")
    with pytest.raises(MissingPlaceholder):
        render_prompt(PromptTemplate("dup", body="{context} {context} {query}"), block("C"), "Q")


def test_render_injective_on_context_and_query():
    a = render_prompt(BASELINE, block("AB"), "C")
    b = render_prompt(BASELINE, block("A"), "BC")
    assert a != b


# ---------------------------------------------------------------------------
# cost
# ---------------------------------------------------------------------------

def test_compute_cost_examples():
    assert compute_cost(1000, 200, 0.5, 1.5) == pytest.approx(0.0008)
    assert compute_cost(0, 0, 3.0, 9.0) == 0.0
    assert compute_cost(2_000_000, 0, 1.0, 123.0) == pytest.approx(2.0)


def test_compute_cost_linear():
    assert compute_cost(200, 0, 1.0, 1.0) == pytest.approx(2 * compute_cost(100, 0, 1.0, 1.0))
    assert compute_cost(0, 300, 1.0, 2.0) == pytest.approx(3 * compute_cost(0, 100, 1.0, 2.0))


# ---------------------------------------------------------------------------
# mock generation
# ---------------------------------------------------------------------------

def test_mock_scripted_answer(mock_script):
    path = mock_script([{"match": "boiling point", "answer": "100 degrees C at sea level"}])
    cfg = LMConfig(endpoint="mock", mock_script=path, price_in=0.5, price_out=1.5)
    result = generate(cfg, "What is the boiling point of water?")
    assert result.answer == "100 degrees C at sea level"
    assert result.latency >= 0
    assert result.cost == pytest.approx(
        compute_cost(result.input_tokens, result.output_tokens, 0.5, 1.5)
    )


def test_mock_first_match_wins_and_fallback(mock_script):
    path = mock_script(
        [
            {"match": "alpha", "answer": "first"},
            {"match": "alpha beta", "answer": "second"},
        ]
    )
    cfg = LMConfig(endpoint="mock", mock_script=path)
    assert generate(cfg, "alpha beta gamma").answer == "first"
    assert generate(cfg, "nothing matches").answer == "I don't know."


def test_mock_deterministic_at_temperature_zero(mock_script):
    path = mock_script([{"match": "q", "answer": "stable answer"}])
    cfg = LMConfig(endpoint="mock", temperature=0.0, mock_script=path)
    answers = {generate(cfg, "q please").answer for _ in range(5)}
    assert answers == {"stable answer"}


def test_mock_scripted_output_tokens(mock_script):
    path = mock_script([{"match": "q", "answer": "a b c", "output_tokens": 42}])
    result = generate(LMConfig(endpoint="mock", mock_script=path), "q")
    assert result.output_tokens == 42


def test_unreachable_endpoint_times_out():
    cfg = LMConfig(endpoint="http://127.0.0.1:9", model_id="x", timeout=0.2)
    with pytest.raises(ProviderTimeout):
        generate(cfg, "hello")


def test_config_validation():
    with pytest.raises(ValueError):
        LMConfig(temperature=-1)
    with pytest.raises(ValueError):
        LMConfig(price_in=-0.1)
