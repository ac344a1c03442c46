import pytest
from hypothesis import assume, given, strategies as st

from dagbft.catalog import ANCHOR_EXAMPLE_PRESENT, anchor_example_certificate
from dagbft.dag import (
    Dag,
    causal_history,
    cert_with_author_round,
    certs_with_round,
    descendants_of,
    has_path,
    is_closed,
    is_edge,
    is_new,
    predecessors,
    to_dot,
    voters_for,
)
from dagbft.model import Certificate, EndorsedPair, Other, ValidatorState

import oracles
from conftest import dags


def cert(a, r, prev=(), tag=""):
    return Certificate(a, r, (Other(f"{a}@{r}{tag}"),), frozenset(prev), frozenset())


def example_dag():
    return Dag(
        anchor_example_certificate(r, i)
        for r, present in ANCHOR_EXAMPLE_PRESENT.items()
        for i in present
    )


def test_certs_with_round():
    assert certs_with_round(1, Dag()) == frozenset()
    a, b = cert("v1", 2), cert("v2", 3)
    assert certs_with_round(2, Dag([a, b])) == {a}
    layer = [cert("v1", 3), cert("v2", 3), cert("v4", 3)]
    assert certs_with_round(3, Dag(layer + [cert("v3", 2)])) == set(layer)


def test_cert_with_author_round():
    assert cert_with_author_round("v1", 1, Dag()) == (None, False)
    c = cert("v1", 2)
    assert cert_with_author_round("v1", 2, Dag([c])) == (c, False)
    assert cert_with_author_round("v9", 2, Dag([c])) == (None, False)


def test_cert_with_author_round_flags_equivocation():
    x, y = cert("f3", 1, tag="x"), cert("f3", 1, tag="y")
    found, ambiguous = cert_with_author_round("f3", 1, Dag([y, x]))
    assert ambiguous
    assert found == min(x, y, key=Certificate.sort_key)


def test_is_edge():
    c, c2 = cert("v1", 2, {"v3"}), cert("v3", 1)
    assert is_edge(c, c2, Dag([c, c2]))
    assert not is_edge(c, c2, Dag([c]))
    c3 = cert("v1", 3, {"v3"})
    assert not is_edge(c3, c2, Dag([c3, c2]))


def test_has_path_basics():
    c = cert("v1", 1)
    assert has_path(c, c, Dag([c]))
    assert not has_path(c, c, Dag())
    c2 = cert("v2", 1)
    assert not has_path(c, c2, Dag())


def test_paths_in_anchor_example():
    dag = example_dag()
    (a10,) = dag.at("v2", 10)
    (a4,) = dag.at("v2", 4)
    (a8,) = dag.at("v1", 8)
    assert has_path(a10, a4, dag)
    assert not has_path(a10, a8, dag)
    assert dag.at("v4", 6) == []


def test_causal_history_examples():
    c = cert("v1", 1)
    assert causal_history(c, Dag([c])) == {c}
    b2, b3 = cert("v2", 1), cert("v3", 1)
    top = cert("v1", 2, {"v2", "v3"})
    assert causal_history(top, Dag([b2, b3, top, cert("v4", 1)])) == {top, b2, b3}
    with pytest.raises(ValueError):
        causal_history(top, Dag([b2]))


def test_causal_history_of_round_four_anchor():
    dag = example_dag()
    (a4,) = dag.at("v2", 4)
    certs = list(dag)
    assert causal_history(a4, dag) == oracles.history(a4, certs)
    assert {c.round for c in causal_history(a4, dag)} == {1, 2, 3, 4}


def test_is_closed():
    dag = Dag([cert("v2", 1), cert("v3", 1)])
    assert is_closed(set(), 5, dag)
    assert is_closed({"v2", "v3"}, 1, dag)
    assert not is_closed({"v2", "v9"}, 1, dag)


def test_is_new():
    assert is_new("v1", 2, ValidatorState())
    assert not is_new("v1", 2, ValidatorState(endorsed=frozenset({EndorsedPair("v1", 2)})))
    assert not is_new("v1", 2, ValidatorState(dag=Dag([cert("v1", 2)])))


def test_voters_in_anchor_example():
    dag = example_dag()
    (a2,) = dag.at("v3", 2)
    (a8,) = dag.at("v1", 8)
    assert len(voters_for(a2, dag)) == 2
    assert len(voters_for(a8, dag)) == 1
    (last,) = dag.at("v3", 11)
    assert voters_for(last, dag) == frozenset()


@given(dags())
def test_paths_match_transitive_closure(certs):
    dag = Dag(certs)
    reach = oracles.transitive_closure(certs)
    for x in certs:
        for y in certs:
            assert has_path(x, y, dag) == ((x, y) in reach)
        assert causal_history(x, dag) == oracles.history(x, certs)
        assert voters_for(x, dag) == oracles.voters(x, certs)
        assert descendants_of(x, dag) == {z for z in certs if (z, x) in reach}
        assert set(predecessors(x, dag)) == {y for y in certs if oracles.edge(x, y, certs)}


@given(dags(), st.sampled_from(["v1", "v2", "v3", "v4", "v9"]), st.integers(1, 7))
def test_insertion_keeps_paths_and_histories(certs, author, r):
    dag = Dag(certs)
    assume(not dag.has(author, r))
    prev = frozenset(c.author for c in certs if c.round == r - 1)
    extra = cert(author, r, prev if r > 1 else (), tag="new")
    bigger = dag.insert(extra)
    for x in certs:
        assert causal_history(x, bigger) == causal_history(x, dag)
        for y in certs:
            assert has_path(x, y, bigger) == has_path(x, y, dag)


@given(dags())
def test_path_is_reflexive_transitive_and_extends_edges(certs):
    dag = Dag(certs)
    for x in certs:
        assert has_path(x, x, dag)
        for y in certs:
            if is_edge(x, y, dag):
                assert has_path(x, y, dag)
            if has_path(x, y, dag):
                for z in certs:
                    if has_path(y, z, dag):
                        assert has_path(x, z, dag)


def test_insert_after_equivocation_does_not_reuse_stale_histories():
    x, y = cert("f3", 1, tag="x"), cert("f3", 1, tag="y")
    top = cert("v1", 2, {"f3"})
    dag = Dag([x, top])
    assert causal_history(top, dag) == {top, x}
    both = dag.insert(y)
    assert causal_history(top, both) == {top, x, y}


def test_dot_export_groups_rounds():
    text = to_dot(example_dag(), "v1")
    assert text.startswith("digraph v1 {")
    assert text.count("rank=same") == 11
    assert text.count('[label="') == sum(len(p) for p in ANCHOR_EXAMPLE_PRESENT.values())
    assert '"v2@10"' in text
