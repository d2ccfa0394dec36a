"""Text front-end for hierarchy specifications (``.bi`` files)."""

from bicheck.dsl.parser import ParseError, ParseFailure, parse, parse_file
from bicheck.dsl.printer import format_domain, format_expr, format_hierarchy, print_hierarchy

__all__ = [
    "ParseError",
    "ParseFailure",
    "format_domain",
    "format_expr",
    "format_hierarchy",
    "parse",
    "parse_file",
    "print_hierarchy",
]
