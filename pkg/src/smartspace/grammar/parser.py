"""Template matching and slot resolution.

Matching is exact and total: a template matches only if it consumes every
token. Among matching templates the winner has the most literal tokens,
then the fewest slots, then the earliest catalog position — a total
order, so parsing is deterministic. Device ambiguity is not an error
here; the phrase is carried through for the dialogue layer to resolve.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..model import DeviceDescriptor, MatchKind, Scalar, match_device
from .intents import (ActionSketch, EntityRef, EventSketch, Intent,
                      IntentKind, NoMatch, ParseResult, TimingSketch)
from .templates import Lit, Slot, SlotKind, Template, template_catalog
from .tokens import Token, TokenKind, tokenize

_DURATION_UNITS = {
    "second": 1.0, "seconds": 1.0, "sec": 1.0, "secs": 1.0,
    "minute": 60.0, "minutes": 60.0, "min": 60.0, "mins": 60.0,
    "hour": 3600.0, "hours": 3600.0, "hr": 3600.0, "hrs": 3600.0,
}

_VALUE_UNITS = {"degree": "degrees", "degrees": "degrees",
                "percent": "percent", "%": "percent"}

Span = Tuple[int, int]


def _match_elements(elements: Sequence, tokens: Sequence[Token]) -> Optional[Dict[str, Span]]:
    def step(ei: int, ti: int) -> Optional[Dict[str, Span]]:
        if ei == len(elements):
            return {} if ti == len(tokens) else None
        element = elements[ei]
        if isinstance(element, Lit):
            if ti < len(tokens) and tokens[ti].kind is TokenKind.WORD \
                    and tokens[ti].text == element.text:
                return step(ei + 1, ti + 1)
            return None
        assert isinstance(element, Slot)
        if element.kind is SlotKind.DEVICE:
            # Contiguous words; shortest assignment that lets the rest match.
            end = ti
            while end < len(tokens) and tokens[end].kind is TokenKind.WORD:
                end += 1
                rest = step(ei + 1, end)
                if rest is not None:
                    return {element.name: (ti, end), **rest}
            return None
        if element.kind is SlotKind.TIME:
            if ti < len(tokens) and tokens[ti].kind is TokenKind.TIME:
                rest = step(ei + 1, ti + 1)
                if rest is not None:
                    return {element.name: (ti, ti + 1), **rest}
            return None
        if element.kind is SlotKind.NUMBER:
            if ti < len(tokens) and tokens[ti].kind is TokenKind.NUM:
                rest = step(ei + 1, ti + 1)
                if rest is not None:
                    return {element.name: (ti, ti + 1), **rest}
            return None
        if element.kind is SlotKind.DURATION:
            if (ti + 1 < len(tokens) and tokens[ti].kind is TokenKind.NUM
                    and tokens[ti + 1].kind is TokenKind.WORD
                    and tokens[ti + 1].text in _DURATION_UNITS):
                rest = step(ei + 1, ti + 2)
                if rest is not None:
                    return {element.name: (ti, ti + 2), **rest}
            return None
        # VALUE: a number with an optional unit word; try the unit first so
        # "20 degrees" binds whole when the tail allows it.
        if ti < len(tokens) and tokens[ti].kind is TokenKind.NUM:
            if ti + 1 < len(tokens) and tokens[ti + 1].kind is TokenKind.WORD \
                    and tokens[ti + 1].text in _VALUE_UNITS:
                rest = step(ei + 1, ti + 2)
                if rest is not None:
                    return {element.name: (ti, ti + 2), **rest}
            rest = step(ei + 1, ti + 1)
            if rest is not None:
                return {element.name: (ti, ti + 1), **rest}
        return None

    return step(0, 0)


def _span_text(tokens: Sequence[Token], span: Span) -> str:
    return " ".join(t.text for t in tokens[span[0]:span[1]])


def _scalar_from_span(tokens: Sequence[Token], span: Span) -> Scalar:
    number = tokens[span[0]].number
    assert number is not None
    unit = ""
    if span[1] - span[0] == 2:
        unit = _VALUE_UNITS[tokens[span[0] + 1].text]
    return Scalar(number, unit)


def _timing_sketch(template: Template, tokens: Sequence[Token],
                   spans: Dict[str, Span]) -> TimingSketch:
    family = template.timing_family
    assert family is not None
    if family == "delay":
        span = spans["duration"]
        amount = tokens[span[0]].number
        unit = tokens[span[0] + 1].text
        assert amount is not None
        return TimingSketch("delay", delay_seconds=amount * _DURATION_UNITS[unit],
                            delay_text=_span_text(tokens, span))
    if family == "at":
        return TimingSketch("at", at=tokens[spans["time"][0]].clock)
    if family == "period":
        return TimingSketch("period", start=tokens[spans["time"][0]].clock,
                            end=tokens[spans["time2"][0]].clock)
    if family == "daily":
        return TimingSketch("daily", at=tokens[spans["time"][0]].clock)
    return TimingSketch("daily_period", start=tokens[spans["time"][0]].clock,
                        end=tokens[spans["time2"][0]].clock)


def _build_intent(template: Template, tokens: Sequence[Token],
                  spans: Dict[str, Span], utterance: str,
                  registry: Sequence[DeviceDescriptor]) -> Intent:
    slots: Dict[str, EntityRef] = {}
    device_phrases: List[str] = []

    if template.action_kind is not None:
        phrase = _span_text(tokens, spans["device"])
        argument = _scalar_from_span(tokens, spans["arg"]) if "arg" in spans else None
        slots["action"] = EntityRef(
            "action", phrase,
            ActionSketch(template.action_kind, device_phrase=phrase, argument=argument),
        )
        device_phrases.append(phrase)

    if template.predicate is not None:
        source_span = spans.get("source") or spans.get("device")
        assert source_span is not None
        phrase = _span_text(tokens, source_span)
        threshold = None
        if "threshold" in spans:
            threshold = _scalar_from_span(tokens, spans["threshold"]).value
        slots["event"] = EntityRef(
            "event", phrase,
            EventSketch(template.predicate, device_phrase=phrase,
                        direction=template.direction, threshold=threshold),
        )
        device_phrases.append(phrase)

    if template.timing_family is not None:
        sketch = _timing_sketch(template, tokens, spans)
        raw = spans.get("time") or spans.get("duration")
        slots["time"] = EntityRef("time", _span_text(tokens, raw) if raw else "", sketch)
    elif "time" in spans:  # change-rule templates carry a bare time slot
        slots["time"] = EntityRef("time", _span_text(tokens, spans["time"]),
                                  TimingSketch("at", at=tokens[spans["time"][0]].clock))

    if "device" in spans and template.action_kind is None and template.predicate is None:
        phrase = _span_text(tokens, spans["device"])
        slots["device"] = EntityRef("device", phrase, phrase)
        device_phrases.append(phrase)
    elif template.predicate is not None and "device" in spans:
        phrase = _span_text(tokens, spans["device"])
        slots["device"] = EntityRef("device", phrase, phrase)

    if "rule_number" in spans:
        number = tokens[spans["rule_number"][0]].number
        assert number is not None
        slots["rule_number"] = EntityRef("rule_number",
                                         _span_text(tokens, spans["rule_number"]), number)

    if template.answer is not None:
        slots["answer"] = EntityRef("answer", template.answer, template.answer)

    confidence = 1.0
    for phrase in device_phrases:
        result = match_device(phrase, registry)
        if result.kind is MatchKind.NONE:
            confidence = min(confidence, 0.0)
        elif result.kind is MatchKind.AMBIGUOUS:
            confidence = min(confidence, 0.5)

    return Intent(kind=template.intent, slots=slots, matched_template=template.id,
                  utterance=utterance, resolution_confidence=confidence)


def _nearest_template(tokens: Sequence[Token], considered: Iterable[Template]) -> Optional[str]:
    token_words = {t.text for t in tokens if t.kind is TokenKind.WORD}
    best_id: Optional[str] = None
    best_overlap = 0
    for template in considered:
        overlap = len(token_words & set(template.literal_texts))
        if overlap > best_overlap:
            best_overlap = overlap
            best_id = template.id
    return best_id


def parse(utterance: str, registry: Sequence[DeviceDescriptor],
          active_contexts: Iterable[str] = ()) -> ParseResult:
    """Parse one utterance against the catalog under the active contexts."""
    contexts = set(active_contexts)
    tokens = tokenize(utterance)
    registry = list(registry)
    considered: List[Template] = []
    matches: List[Tuple[Template, int, Dict[str, Span]]] = []
    for index, template in enumerate(template_catalog()):
        if template.input_contexts and not (set(template.input_contexts) & contexts):
            continue
        considered.append(template)
        spans = _match_elements(template.elements, tokens)
        if spans is not None:
            matches.append((template, index, spans))
    if not matches:
        return NoMatch(reason="no template matched",
                       nearest_template=_nearest_template(tokens, considered))
    template, _, spans = max(
        matches, key=lambda m: (m[0].literal_count, -m[0].slot_count, -m[1])
    )
    return _build_intent(template, tokens, spans, utterance, registry)
