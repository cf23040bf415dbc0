"""Closed-form cost models: crowd annotation HIT math vs LLM token math."""

from __future__ import annotations

import math
from dataclasses import dataclass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotationCostModel:
    n_sentences: int
    per_hit: int = 10
    annotated_per_hit: int = 8
    price_per_hit: float = 1.00
    rejection_rate: float = 0.0
    annotators_per_item: int = 1

    def __post_init__(self):
        if self.annotated_per_hit <= 0:
            raise ConfigError("annotated_per_hit must be > 0")
        if self.annotated_per_hit > self.per_hit:
            raise ConfigError("annotated_per_hit cannot exceed per_hit")
        if not 0 <= self.rejection_rate < 1:
            raise ConfigError("rejection_rate must be in [0, 1)")
        if min(self.n_sentences, self.price_per_hit, self.annotators_per_item) < 0:
            raise ConfigError("quantities must be nonnegative")


@dataclass(frozen=True)
class LLMCostModel:
    requests: int
    instruction_tokens: float = 330
    demos: int = 15
    demo_tokens_avg: float = 20.8
    out_examples: int = 50
    out_tokens_avg: float = 21
    price_in_per_m: float = 10.00
    price_out_per_m: float = 30.00

    def __post_init__(self):
        values = (
            self.requests, self.instruction_tokens, self.demos,
            self.demo_tokens_avg, self.out_examples, self.out_tokens_avg,
            self.price_in_per_m, self.price_out_per_m,
        )
        if any(v < 0 for v in values):
            raise ConfigError("all quantities must be nonnegative")


def mturk_cost(model: AnnotationCostModel) -> float:
    """Total crowd-annotation cost, rounded to the nearest whole currency unit.

    hits = ceil(n / annotated_per_hit); rejected assignments are reassigned,
    so the surcharge is multiplicative: hits * price * (1 + rejection_rate),
    then scaled by annotators per item.
    """
    hits = math.ceil(model.n_sentences / model.annotated_per_hit)
    raw = hits * model.price_per_hit * (1 + model.rejection_rate) * model.annotators_per_item
    return float(round(raw))


@dataclass
class LLMCostBreakdown:
    tokens_per_request: float
    total_tokens: float
    input_tokens: float
    output_tokens: float
    input_cost: float
    output_cost: float
    total: float

    def render(self) -> str:
        return (
            f"tokens/request  {self.tokens_per_request:,.0f}\n"
            f"input tokens    {self.input_tokens:,.0f}  (${self.input_cost:,.2f})\n"
            f"output tokens   {self.output_tokens:,.0f}  (${self.output_cost:,.2f})\n"
            f"total tokens    {self.total_tokens:,.0f}\n"
            f"total cost      ${self.total:,.2f}"
        )


def llm_cost(model: LLMCostModel) -> LLMCostBreakdown:
    """Generation cost from per-request token arithmetic; exact pre-rounding,
    cents applied at presentation."""
    in_per_request = model.instruction_tokens + model.demos * model.demo_tokens_avg
    out_per_request = model.out_examples * model.out_tokens_avg
    input_tokens = in_per_request * model.requests
    output_tokens = out_per_request * model.requests
    input_cost = input_tokens / 1e6 * model.price_in_per_m
    output_cost = output_tokens / 1e6 * model.price_out_per_m
    return LLMCostBreakdown(
        tokens_per_request=in_per_request + out_per_request,
        total_tokens=input_tokens + output_tokens,
        input_tokens=input_tokens,
        output_tokens=output_tokens,
        input_cost=input_cost,
        output_cost=output_cost,
        total=input_cost + output_cost,
    )


def llm_cost_from_usage(
    token_usage: tuple[int, int],
    price_in_per_m: float = 10.00,
    price_out_per_m: float = 30.00,
) -> LLMCostBreakdown:
    """Accounting mode: cost of measured (input, output) token usage."""
    input_tokens, output_tokens = token_usage
    input_cost = input_tokens / 1e6 * price_in_per_m
    output_cost = output_tokens / 1e6 * price_out_per_m
    return LLMCostBreakdown(
        tokens_per_request=0.0,
        total_tokens=float(input_tokens + output_tokens),
        input_tokens=float(input_tokens),
        output_tokens=float(output_tokens),
        input_cost=input_cost,
        output_cost=output_cost,
        total=input_cost + output_cost,
    )
