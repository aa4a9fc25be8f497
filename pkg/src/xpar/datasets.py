"""Deterministic dataset generators for the benchmark suite.

Two shapes are produced: an auction-site document (site with regions,
people, open_auctions, closed_auctions, catgraph and categories children,
keeping the 255000:120000:97500:10000:10000 population ratios), and a flat
bibliography document (one root with article/inproceedings/book children).
Text and attribute values come from small categorical pools so the suite's
value predicates select non-trivial subsets by construction.

``scale`` multiplies the populations; scale 1 is roughly 10^4 nodes, so
scale 100 is roughly 10^6.  The same spec always yields identical bytes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

_CONTINENTS = ["africa", "asia", "australia", "europe", "namerica", "samerica"]
_CONTINENT_SHARE = [0.10, 0.30, 0.10, 0.25, 0.20, 0.05]
_LOCATIONS = ["Germany", "France", "Japan", "Russia", "Brazil"]
_PAYMENTS = ["Creditcard", "Cash", "Money order", "Personal Check"]
_WORDS = ("quaint gilded obscure sturdy brass copper velvet amber carved "
          "woven painted rustic solemn quiet bright humble ornate plain").split()
_FIRST = ["Ada", "Boris", "Chen", "Dana", "Emil", "Fay", "Goro", "Hana",
          "Ines", "Jonas", "Kira", "Liam", "Mona", "Nils", "Okan", "Pia"]
_LAST = ["Abel", "Baker", "Cruz", "Dietz", "Endo", "Fort", "Gray", "Hale",
         "Iwata", "Jung", "Kern", "Lund", "Mori", "Nagy", "Odum", "Park"]


@dataclass(frozen=True)
class GenSpec:
    dataset: str  # "xmark_like" or "dblp_like"
    scale: float = 1.0
    seed: int = 0


def generate(spec):
    """XML bytes for ``spec``; identical specs give identical bytes."""
    if spec.scale <= 0:
        raise ValueError("scale must be positive")
    if spec.dataset == "xmark_like":
        return _xmark(spec.scale, spec.seed)
    if spec.dataset == "dblp_like":
        return _dblp(spec.scale, spec.seed)
    raise ValueError(f"unknown dataset {spec.dataset!r}")


def write(spec, path):
    data = generate(spec)
    with open(path, "wb") as f:
        f.write(data)
    return len(data)


def _phrase(rng, k=3):
    return " ".join(rng.choice(_WORDS) for _ in range(k))


def _xmark(scale, seed):
    rng = random.Random(seed)
    u = 2.54 * scale
    n_people = max(1, round(255 * u))
    n_open = max(2, round(120 * u))
    n_closed = max(1, round(97.5 * u))
    n_edges = max(1, round(10 * u))
    n_cats = max(8, round(10 * u))
    n_items = max(6, round(21.75 * u))

    out = []
    w = out.append
    w("<site>")

    w("<regions>")
    remaining = n_items
    item_no = 0
    for ci, cont in enumerate(_CONTINENTS):
        count = max(1, round(n_items * _CONTINENT_SHARE[ci]))
        if ci == len(_CONTINENTS) - 1:
            count = max(1, remaining)
        remaining -= count
        w(f"<{cont}>")
        for _ in range(count):
            location = "United States" if rng.random() < 0.6 else rng.choice(_LOCATIONS)
            quantity = "0" if rng.random() < 0.2 else str(rng.randint(1, 9))
            payment = rng.choice(_PAYMENTS)
            w(f'<item id="item{item_no}">')
            w(f"<location>{location}</location>")
            w(f"<quantity>{quantity}</quantity>")
            w(f"<name>{_phrase(rng, 2)} {item_no}</name>")
            w(f"<payment>{payment}</payment>")
            w("<description><parlist>")
            for _ in range(rng.randint(1, 3)):
                w(f"<listitem>{_phrase(rng)}</listitem>")
            w("</parlist></description>")
            for _ in range(rng.randint(1, 3)):
                w(f'<incategory category="category{rng.randrange(n_cats)}"/>')
            w("</item>")
            item_no += 1
        w(f"</{cont}>")
    w("</regions>")

    w("<people>")
    for i in range(n_people):
        first, last = rng.choice(_FIRST), rng.choice(_LAST)
        w(f'<person id="person{i}"><name>{first} {last}</name>'
          f"<emailaddress>mailto:{first}.{last}{i}@example.net</emailaddress></person>")
    w("</people>")

    w("<open_auctions>")
    for i in range(n_open):
        w(f'<open_auction id="open_auction{i}">')
        for _ in range(rng.randint(0, 4)):
            w(f"<bidder><increase>{rng.randint(1, 99)}.{rng.choice(('00', '50'))}"
              f"</increase></bidder>")
        w(f"<annotation><description>{_phrase(rng)}</description></annotation>")
        w("</open_auction>")
    w("</open_auctions>")

    w("<closed_auctions>")
    for i in range(n_closed):
        w(f'<closed_auction id="closed_auction{i}"><price>{rng.randint(1, 500)}.00</price>'
          f"<annotation><description>{_phrase(rng)}</description></annotation>"
          f"</closed_auction>")
    w("</closed_auctions>")

    w("<catgraph>")
    for _ in range(n_edges):
        w(f'<edge from="category{rng.randrange(n_cats)}" '
          f'to="category{rng.randrange(n_cats)}"/>')
    w("</catgraph>")

    w("<categories>")
    for i in range(n_cats):
        w(f'<category id="category{i}"><name>category name {i}</name></category>')
    w("</categories>")

    w("</site>")
    return "".join(out).encode()


def _dblp(scale, seed):
    rng = random.Random(seed)
    n_pubs = max(3, round(1000 * scale))
    out = []
    w = out.append
    w("<dblp>")
    for i in range(n_pubs):
        r = rng.random()
        tag = "article" if r < 0.6 else ("inproceedings" if r < 0.85 else "book")
        w(f"<{tag}>")
        for _ in range(rng.randint(1, 4)):
            w(f"<author>{rng.choice(_FIRST)} {rng.choice(_LAST)}</author>")
        w(f"<title>{_phrase(rng).title()} {i}</title>")
        w(f"<year>{1980 + rng.randrange(45)}</year>")
        w(f"</{tag}>")
    w("</dblp>")
    return "".join(out).encode()


def running_example_xml():
    """Auction document whose open_auction elements sit at PRE values
    2, 5, 42, 81, 109 and 203 (document node is PRE 0)."""

    def bidder(val):
        return f"<bidder><increase>{val}</increase></bidder>"  # 3 nodes

    def flat_bidder(val):
        return f"<bidder>{val}</bidder>"  # 2 nodes

    auctions = [
        flat_bidder("1.00"),                                     # PRE 2, size 3
        "".join(bidder(f"{i}.00") for i in range(12)),           # PRE 5, size 37
        "".join(bidder(f"{i}.50") for i in range(12)) + flat_bidder("9.99"),  # PRE 42, 39
        "".join(bidder(f"{i}.25") for i in range(9)),            # PRE 81, size 28
        "".join(bidder(f"{i}.75") for i in range(31)),           # PRE 109, size 94
        bidder("1.10") + bidder("2.20"),                         # PRE 203
    ]
    body = "".join(f"<open_auction>{content}</open_auction>" for content in auctions)
    return f"<site>{body}</site>".encode()
