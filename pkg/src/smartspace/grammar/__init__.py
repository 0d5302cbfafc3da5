"""Deterministic intent grammar: tokenizer, template catalog and parser."""

from .intents import EntityRef, Intent, IntentKind, NoMatch, ParseResult
from .parser import parse
from .templates import Template, dump_catalog, instantiate, template_catalog
from .tokens import Token, TokenKind, tokenize

__all__ = [
    "EntityRef",
    "Intent",
    "IntentKind",
    "NoMatch",
    "ParseResult",
    "Template",
    "Token",
    "TokenKind",
    "dump_catalog",
    "instantiate",
    "parse",
    "template_catalog",
    "tokenize",
]
