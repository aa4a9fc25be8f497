import sys
from pathlib import Path

import pytest

# src layout without requiring an installed package
_SRC = Path(__file__).resolve().parent.parent / "src"
if str(_SRC) not in sys.path:
    sys.path.insert(0, str(_SRC))

from xpar import parse_document  # noqa: E402


@pytest.fixture(scope="session")
def running_example_table():
    """Document whose open_auction elements sit at PRE 2, 5, 42, 81, 109, 203."""
    from xpar.datasets import running_example_xml

    table = parse_document(running_example_xml(), "xmark")
    return table


@pytest.fixture(scope="session")
def small_xmark():
    from xpar.datasets import GenSpec, generate

    xml = generate(GenSpec(dataset="xmark_like", scale=1.0, seed=7))
    return parse_document(xml, "xmark")


@pytest.fixture(scope="session")
def small_dblp():
    from xpar.datasets import GenSpec, generate

    xml = generate(GenSpec(dataset="dblp_like", scale=1.0, seed=11))
    return parse_document(xml, "dblp")
