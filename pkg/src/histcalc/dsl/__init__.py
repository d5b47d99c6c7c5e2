"""Model-file parser and expression printers."""

from .parser import ParseError, ParsedModel, parse, parse_file
from .printer import parse_structured, pretty_print, recognize, to_latex, to_structured, to_text

__all__ = [
    "ParseError", "ParsedModel", "parse", "parse_file", "parse_structured", "pretty_print",
    "recognize", "to_latex", "to_structured", "to_text",
]
