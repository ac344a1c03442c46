import os

from hypothesis import HealthCheck, settings, strategies as st

from dagbft.committee import Committee
from dagbft.model import Block, Bond, Certificate, Other, Unbond

settings.register_profile(
    "default",
    max_examples=150,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=1000, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ADDRS = ["v1", "v2", "v3", "v4", "v5", "f6"]

addresses = st.sampled_from(ADDRS)
stakes = st.integers(min_value=1, max_value=5)

transactions = st.one_of(
    st.builds(Bond, addresses, stakes),
    st.builds(Unbond, addresses),
    st.builds(Other, st.text(alphabet="abcxyz", max_size=3)),
)

committees = st.dictionaries(addresses, stakes, min_size=1, max_size=5).map(Committee)


@st.composite
def chains(draw, max_blocks=5):
    """Blocks at strictly increasing even rounds."""
    n = draw(st.integers(0, max_blocks))
    gaps = draw(st.lists(st.integers(1, 3), min_size=n, max_size=n))
    blocks, r = [], 0
    for g in gaps:
        r += 2 * g
        blocks.append(Block(r, tuple(draw(st.lists(transactions, max_size=3)))))
    return blocks


@st.composite
def dags(draw, max_rounds=5, authors=("v1", "v2", "v3", "v4")):
    """Backward-closed certificate sets with random edges and occasional gaps."""
    certs = []
    layer = []
    for r in range(1, draw(st.integers(1, max_rounds)) + 1):
        present = draw(st.lists(st.sampled_from(authors), min_size=1, unique=True))
        prev_authors = sorted(c.author for c in layer)
        nxt = []
        for a in sorted(present):
            prev = frozenset()
            if r > 1:
                if not prev_authors:
                    break
                prev = frozenset(draw(st.lists(st.sampled_from(prev_authors), min_size=1, unique=True)))
            nxt.append(Certificate(a, r, (Other(f"{a}@{r}"),), prev, frozenset()))
        if not nxt:
            break
        certs += nxt
        layer = nxt
    return certs
