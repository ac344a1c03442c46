"""Slow, literal reference implementations used to cross-check the package.

Nothing here imports the package's algorithms: committees are plain dicts,
DAGs are plain lists of certificates, and every definition is written in its
most direct recursive or brute-force form.
"""
from __future__ import annotations

from dagbft.model import Bond, Unbond


# committees as plain dicts

def cmt(w: dict, tx) -> dict:
    w = dict(w)
    if isinstance(tx, Bond):
        w[tx.validator] = w.get(tx.validator, 0) + tx.stake
    elif isinstance(tx, Unbond):
        w.pop(tx.validator, None)
    return w


def cmt_blocks(w: dict, blocks) -> dict:
    for b in blocks:
        for tx in b.transactions:
            w = cmt(w, tx)
    return w


def last_round(blocks) -> int:
    return blocks[-1].round if blocks else 0


def bcmt_aux(r: int, blocks: list, genesis: dict) -> dict:
    """Right recursion: drop the newest block while it is not before r."""
    if not blocks:
        return dict(genesis)
    if r > last_round(blocks):
        return cmt_blocks(dict(genesis), blocks)
    return bcmt_aux(r, blocks[:-1], genesis)


def bcmt(r: int, blocks: list, genesis: dict):
    if r > last_round(blocks) + 2:
        return None
    return bcmt_aux(r, list(blocks), genesis)


def acmt(r: int, blocks: list, genesis: dict, lookback: int):
    if r <= lookback:
        return dict(genesis)
    return bcmt(r - lookback, blocks, genesis)


def fstk_by_search(n: int) -> int:
    """Largest f with 3f < n, by counting up (small n only)."""
    f = 0
    while 3 * (f + 1) < n:
        f += 1
    return f


def is_max_below_third(f: int, n: int) -> bool:
    """f is the largest integer strictly below n/3 (n > 0)."""
    return 3 * f < n <= 3 * (f + 1)


# DAGs as lists

def edge(c, c2, certs) -> bool:
    return c in certs and c2 in certs and c.round == c2.round + 1 and c2.author in c.previous


def transitive_closure(certs) -> set:
    """All (x, y) with a path from x down to y, by fixpoint iteration."""
    certs = list(certs)
    reach = {(c, c) for c in certs}
    reach |= {(x, y) for x in certs for y in certs if edge(x, y, certs)}
    changed = True
    while changed:
        changed = False
        for x, y in list(reach):
            for y2, z in list(reach):
                if y2 == y and (x, z) not in reach:
                    reach.add((x, z))
                    changed = True
    return reach


def history(c, certs) -> set:
    reach = transitive_closure(certs)
    return {y for (x, y) in reach if x == c}


def voters(c, certs) -> set:
    return {x.author for x in certs if edge(x, c, certs)}
