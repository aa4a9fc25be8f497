import random

import pytest

from xpar.errors import UnsupportedFeatureError, XPathSyntaxError
from xpar.xpath_ast import (Axis, FnLast, IndexAccess, Kind, KindTest,
                            NameTest, Path, Step, Wildcard, unparse)
from xpar.xpath_parser import parse_xpath

from randgen import random_query


def test_descendant_shorthand_normalizes_to_descendant_step():
    q = parse_xpath("/site//open_auction")
    assert q.absolute
    assert q.steps == (Step(Axis.CHILD, NameTest("site")),
                       Step(Axis.DESCENDANT, NameTest("open_auction")))


def test_relative_child_step_with_last_predicate():
    q = parse_xpath("bidder[last()]")
    assert not q.absolute
    assert q.steps == (Step(Axis.CHILD, NameTest("bidder"), (FnLast(),)),)


def test_modified_sibling_count_query_parses():
    q = parse_xpath("self::*[count(./following-sibling::book[1]/author) < count(./author)]")
    assert q.steps[0].axis is Axis.SELF
    assert isinstance(q.steps[0].test, Wildcard)
    assert len(q.steps[0].predicates) == 1


def test_document_node_kind_test():
    q = parse_xpath("parent::incategory[ancestor::site/parent::document-node()]/parent::item/@id")
    assert q.steps[0].axis is Axis.PARENT
    guard = q.steps[0].predicates[0]
    assert guard.steps[-1].test == KindTest(Kind.DOCUMENT)
    assert q.steps[-1].axis is Axis.ATTRIBUTE


def test_index_access_heads():
    q = parse_xpath('db:attribute("xmark10", "category52")')
    assert q.index == IndexAccess("attribute", "xmark10", "category52")
    assert q.absolute and not q.steps
    q = parse_xpath('db:text("xmark10", "Creditcard")/parent::payment')
    assert q.index.kind == "text"
    assert q.steps[0].axis is Axis.PARENT


def test_double_slash_before_attribute_keeps_explicit_step():
    q = parse_xpath("/a//@id")
    assert [s.axis for s in q.steps] == [Axis.CHILD, Axis.DESCENDANT_OR_SELF, Axis.ATTRIBUTE]
    assert q.steps[1].test == KindTest(Kind.NODE)


def test_root_only():
    q = parse_xpath("/")
    assert q == Path(absolute=True)
    assert unparse(q) == "/"


@pytest.mark.parametrize("text,pos", [
    ("/site[", 6),
    ("/site/[1]", 6),
    ("bidder[last()", 13),
    ("//", 2),
    ("a/b[ 1 }", 7),
])
def test_syntax_error_carries_position(text, pos):
    with pytest.raises(XPathSyntaxError) as ei:
        parse_xpath(text)
    assert ei.value.pos == pos


@pytest.mark.parametrize("text", [
    "/a/preceding::b",
    "following::x",
    "/a/namespace::b",
    "a[substring(., 1) = 'x']",
    "a[. != 'x']",
    "a[/b]",
    "count(/a)",
    "/a/comment()",
])
def test_out_of_subset_features_are_distinct_errors(text):
    with pytest.raises(UnsupportedFeatureError):
        parse_xpath(text)


@pytest.mark.parametrize("text", [
    "/site//open_auction/bidder[last()]",
    '/site//*[name(.)="emailaddress" or name(.)="annotation" or name(.)="description"]',
    '/site//incategory[./@category="category52"]/parent::item/@id',
    '/site/regions/*/item[./location="United States" and ./quantity > 0'
    ' and ./payment="Creditcard" and ./description and ./name]',
    "/site/open_auctions/open_auction/bidder/increase",
    '/site/regions/*[name(.)="africa" or name(.)="asia"]/item/description/parlist/listitem',
    "/dblp/article/author",
    "/dblp//title",
    "/dblp/book[count(./following-sibling::book[1]/author) < count(./author)]",
    'descendant-or-self::*[name(.)="emailaddress" or name(.)="annotation"]',
    'self::*[./@category="category52"]/parent::item/@id',
    "descendant-or-self::open_auction/bidder[last()]",
    'parent::item[parent::*/parent::regions/parent::site/parent::document-node()]'
    '[location = "United States"][0.0 < quantity][description][name]',
    "descendant-or-self::*/title",
])
def test_suite_queries_round_trip(text):
    ast = parse_xpath(text)
    assert parse_xpath(unparse(ast)) == ast


def test_random_ast_round_trip():
    rng = random.Random(20240817)
    for _ in range(400):
        ast = random_query(rng)
        text = unparse(ast)
        assert parse_xpath(text) == ast, text


def test_fuzz_strings_fail_cleanly():
    import string

    rng = random.Random(1)
    alphabet = string.ascii_letters + string.digits + "/[]()@*.:<>=\"' _-,;!"
    for _ in range(3000):
        s = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 40)))
        try:
            parse_xpath(s)
        except (XPathSyntaxError, UnsupportedFeatureError):
            pass  # the only acceptable failure modes
