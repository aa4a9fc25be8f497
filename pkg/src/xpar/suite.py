"""The benchmark query suite and its named split variants.

Nine queries over the two generated datasets, each with the customary
split variants: (a)/(b) style splits at different boundaries and, for xm2,
xm3 and xm4, a (c) variant derived from the index-optimized form of the
query.  Variant texts referencing the value index are templated with the
target database name.

db2's (a)/(b) variants rely on the flat bibliography schema (title only
one level below the root children); they hold on the generated data, while
the splitter's own enumeration uses the schema-independent pushdown form.
"""

from __future__ import annotations

from dataclasses import dataclass

from .splitter import SplitPlan, _static_merge
from .xpath_parser import parse_xpath


@dataclass(frozen=True)
class SuiteQuery:
    key: str
    dataset: str  # xmark_like | dblp_like
    text: str


@dataclass(frozen=True)
class SuiteVariant:
    key: str          # e.g. "xm3a"
    query_key: str    # e.g. "xm3"
    prefix_text: str
    suffix_text: str

    def plan(self):
        prefix = parse_xpath(self.prefix_text)
        suffix = parse_xpath(self.suffix_text)
        return SplitPlan(prefix, suffix, _static_merge(prefix, suffix), "suite_variant")


QUERIES = [
    SuiteQuery("xm1", "xmark_like",
               '/site//*[name(.)="emailaddress" or name(.)="annotation"'
               ' or name(.)="description"]'),
    SuiteQuery("xm2", "xmark_like",
               '/site//incategory[./@category="category52"]/parent::item/@id'),
    SuiteQuery("xm3", "xmark_like", "/site//open_auction/bidder[last()]"),
    SuiteQuery("xm4", "xmark_like",
               '/site/regions/*/item[./location="United States" and ./quantity > 0'
               ' and ./payment="Creditcard" and ./description and ./name]'),
    SuiteQuery("xm5", "xmark_like", "/site/open_auctions/open_auction/bidder/increase"),
    SuiteQuery("xm6", "xmark_like",
               '/site/regions/*[name(.)="africa" or name(.)="asia"]/item/'
               "description/parlist/listitem"),
    SuiteQuery("db1", "dblp_like", "/dblp/article/author"),
    SuiteQuery("db2", "dblp_like", "/dblp//title"),
    SuiteQuery("db3", "dblp_like",
               "/dblp/book[count(./following-sibling::book[1]/author)"
               " < count(./author)]"),
]

QUERIES_BY_KEY = {q.key: q for q in QUERIES}


def variants(db_names):
    """All named split variants; ``db_names`` maps dataset to database name."""
    xm = db_names.get("xmark_like", "xmark")
    out = [
        SuiteVariant("xm1a", "xm1", "/site/*",
                     'descendant-or-self::*[name(.)="emailaddress"'
                     ' or name(.)="annotation" or name(.)="description"]'),
        SuiteVariant("xm2a", "xm2", "/site//incategory",
                     'self::*[./@category="category52"]/parent::item/@id'),
        SuiteVariant("xm2b", "xm2", "/site/*",
                     'descendant-or-self::incategory[./@category="category52"]/'
                     "parent::item/@id"),
        SuiteVariant("xm2c", "xm2",
                     f'db:attribute("{xm}", "category52")',
                     "parent::incategory[ancestor::site/parent::document-node()]"
                     "/parent::item/@id"),
        SuiteVariant("xm3a", "xm3", "/site//open_auction", "bidder[last()]"),
        SuiteVariant("xm3b", "xm3", "/site/*",
                     "descendant-or-self::open_auction/bidder[last()]"),
        SuiteVariant("xm3c", "xm3", "/site/open_auctions/open_auction", "bidder[last()]"),
        SuiteVariant("xm4a", "xm4", "/site/regions/*",
                     'item[./location="United States" and ./quantity > 0 and'
                     ' ./payment="Creditcard" and ./description and ./name]'),
        SuiteVariant("xm4b", "xm4", "/site/regions/*/item",
                     'self::*[./location="United States" and ./quantity > 0 and'
                     ' ./payment="Creditcard" and ./description and ./name]'),
        SuiteVariant("xm4c", "xm4",
                     f'db:text("{xm}", "Creditcard")/parent::payment',
                     "parent::item[parent::*/parent::regions/parent::site/"
                     'parent::document-node()][location = "United States"]'
                     "[0.0 < quantity][description][name]"),
        SuiteVariant("xm5a", "xm5", "/site/open_auctions/open_auction/bidder", "increase"),
        SuiteVariant("xm5b", "xm5", "/site/open_auctions/open_auction", "bidder/increase"),
        SuiteVariant("xm6a", "xm6", "/site/regions/*",
                     'self::*[name(.)="africa" or name(.)="asia"]/item/'
                     "description/parlist/listitem"),
        SuiteVariant("xm6b", "xm6",
                     '/site/regions/*[name(.)="africa" or name(.)="asia"]/item',
                     "description/parlist/listitem"),
        SuiteVariant("db1a", "db1", "/dblp/article", "author"),
        SuiteVariant("db2a", "db2", "/dblp/*", "title"),
        SuiteVariant("db2b", "db2", "/dblp/*", "descendant-or-self::*/title"),
        SuiteVariant("db3a", "db3", "/dblp/book",
                     "self::*[count(./following-sibling::book[1]/author)"
                     " < count(./author)]"),
    ]
    return out


VARIANT_KEYS = [v.key for v in variants({"xmark_like": "x"})]


def variants_by_key(db_names):
    return {v.key: v for v in variants(db_names)}
