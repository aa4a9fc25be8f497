"""Parallel XPath query engine over a PRE-indexed XML store.

Queries are split into an absolute prefix query and a relative suffix
query; the prefix result is block-partitioned and the suffix is evaluated
in parallel from each partition, either by shipping PRE lists to the
client or by storing partitions in a server-side temporary document.
"""

from .engine import evaluate, evaluate_per_node, number_value, string_value
from .nodestore import (NodeTable, build_path_summary, build_value_index,
                        node_pre, open_pre, parse_document)
from .xpath_ast import Path, unparse
from .xpath_parser import parse_xpath

__version__ = "0.1.0"

__all__ = [
    "NodeTable", "Path", "build_path_summary", "build_value_index",
    "evaluate", "evaluate_per_node", "node_pre", "number_value", "open_pre",
    "parse_document", "parse_xpath", "string_value", "unparse",
]
