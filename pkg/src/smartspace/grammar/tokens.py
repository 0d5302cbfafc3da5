"""Utterance tokenizer.

Lowercase word tokens; clock times ("4pm", "7:50 am", "17:00") fold into
single TIME tokens; bare numbers become NUM tokens; punctuation is
dropped. Tokenization never fails — empty input yields an empty list.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import time
from enum import Enum
from typing import List, Optional


class TokenKind(str, Enum):
    WORD = "word"
    NUM = "num"
    TIME = "time"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    number: Optional[float] = None
    clock: Optional[time] = None

    @classmethod
    def word(cls, text: str) -> "Token":
        return cls(TokenKind.WORD, text)

    @classmethod
    def num(cls, text: str, value: float) -> "Token":
        return cls(TokenKind.NUM, text, number=value)

    @classmethod
    def time_of_day(cls, text: str, value: time) -> "Token":
        return cls(TokenKind.TIME, text, clock=value)


_MERIDIEM_TIME = re.compile(r"(\d{1,2})(?::(\d{2}))?\s*(am|pm)\b")
_CLOCK_TIME = re.compile(r"(\d{1,2}):(\d{2})\b")
_NUMBER = re.compile(r"\d+(?:\.\d+)?")
_WORD = re.compile(r"[a-z][a-z']*")


def _meridiem_to_time(hour: int, minute: int, meridiem: str) -> Optional[time]:
    if not (1 <= hour <= 12) or not (0 <= minute <= 59):
        return None
    if meridiem == "pm" and hour != 12:
        hour += 12
    if meridiem == "am" and hour == 12:
        hour = 0
    return time(hour, minute)


def tokenize(utterance: str) -> List[Token]:
    text = utterance.lower()
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if not (ch.isalnum()):
            pos += 1
            continue
        match = _MERIDIEM_TIME.match(text, pos)
        if match:
            parsed = _meridiem_to_time(int(match.group(1)), int(match.group(2) or 0),
                                       match.group(3))
            if parsed is not None:
                tokens.append(Token.time_of_day(match.group(0), parsed))
                pos = match.end()
                continue
        match = _CLOCK_TIME.match(text, pos)
        if match:
            hour, minute = int(match.group(1)), int(match.group(2))
            if hour <= 23 and minute <= 59:
                tokens.append(Token.time_of_day(match.group(0), time(hour, minute)))
                pos = match.end()
                continue
        match = _NUMBER.match(text, pos)
        if match:
            tokens.append(Token.num(match.group(0), float(match.group(0))))
            pos = match.end()
            continue
        match = _WORD.match(text, pos)
        if match:
            tokens.append(Token.word(match.group(0)))
            pos = match.end()
            continue
        pos += 1
    return tokens
