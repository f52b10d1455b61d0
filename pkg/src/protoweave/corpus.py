"""The bundled protocol corpus and the pairs composed from it."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from protoweave.syntax import parse_file_text

CORPUS_FILE = "corpus.proto-ic"

# (left, right, canonical counts for strong/weak/corr/all).  Counts not
# printed alongside the protocols are regression pins from this implementation.
CORPUS_PAIRS = [
    ("i1", "i2", (1, 1, 1, 1)),
    ("assert_pay", "consume_item", (1, 1, 1, 1)),
    ("buffet", "i1", (1, 1, 1, 1)),
    ("branch_l", "int_send", (2, 2, 2, 2)),
    ("rec_left", "rec_right", (2, 2, 2, 2)),
    ("loop_p1", "once_p2", (1, 1, 1, 1)),
    ("nested_s1", "nested_s2", (1, 4, 1, 4)),
    ("pintan", "bank", (0, 1, 0, 1)),
    ("bank_pintan_keyp", "keycard", (0, 1, 0, 1)),
    ("auth_sa", "auth_sb", (0, 1, 0, 1)),
    ("s1", "s2", (0, 1, 2, 3)),
    ("ex3_sa", "ex3_sb", (0, 1, 0, 1)),
    ("sa", "sb", (0, 0, 0, 0)),
    ("sa_void", "sb", (0, 12, 4, 16)),
    ("s_i", "s_u", (50, 50, 50, 50)),
    ("uai_left", "uai_right", (0, 0, 6, 6)),
]


def corpus_text() -> str:
    return resources.files("protoweave.data").joinpath(CORPUS_FILE).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def load_corpus() -> dict:
    """Name -> protocol for every protocol of the bundled corpus, in file order."""
    return parse_file_text(corpus_text(), CORPUS_FILE)


def corpus_path():
    return resources.files("protoweave.data").joinpath(CORPUS_FILE)
