from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folearn.evaluation import models, template_assignment
from folearn.logic import (
    FALSE,
    And,
    DistAtom,
    Equality,
    Exists,
    FormulaSyntaxError,
    HypothesisTemplate,
    Not,
    Or,
    RelationAtom,
    UndeclaredVariable,
    atoms_over,
    distance_guard,
    enumerate_bounded_space,
    free_vars,
    is_quantifier_free,
    is_syntactically_local,
    pad_parameters,
    parse_body,
    parse_formula,
    quantifier_rank,
    relativize,
    render,
    render_template,
)
from folearn.structure import LocalAccessOracle, ball
from strategies import GRAPH, graphs, templates


class TestParsing:
    def test_example1_shape(self, ex1_template):
        t = ex1_template
        assert t.instance_vars == ("x",) and t.parameter_vars == ("y1", "y2")
        assert quantifier_rank(t.body) == 1
        assert free_vars(t.body) == ("x", "y1", "y2")

    def test_precedence(self):
        assert parse_body("R(x) | R(y) & E(x,y)") == Or((RelationAtom("R", ("x",)), And((RelationAtom("R", ("y",)), RelationAtom("E", ("x", "y"))))))
        assert parse_body("!R(x) & R(y)") == And((Not(RelationAtom("R", ("x",))), RelationAtom("R", ("y",))))

    def test_implication_is_right_associative_and_desugared(self):
        a, b, c = (RelationAtom("R", (v,)) for v in "abc")
        assert parse_body("R(a) -> R(b) -> R(c)") == Or((Not(a), Or((Not(b), c))))

    def test_distance_atoms(self):
        assert parse_body("d<=2(x,y)") == DistAtom("x", "y", 2)
        assert parse_body("d>3(x,y)") == DistAtom("x", "y", 3, negated=True)

    def test_quantifier_body_extends_right(self):
        f = parse_body("exists z. R(z) & E(x,z)")
        assert isinstance(f, Exists) and isinstance(f.body, And)

    @pytest.mark.parametrize(
        "text",
        ["phi(x; ) := R(x", "phi(x; ) := R(x) &", "phi(x;) := exists . R(x)", "phi(x) := R(x)", "phi(x;) := R(x) $"],
    )
    def test_syntax_errors(self, text):
        with pytest.raises(FormulaSyntaxError):
            parse_formula(text)

    def test_undeclared_variable(self):
        with pytest.raises(UndeclaredVariable):
            parse_formula("phi(x; ) := E(x, y)")

    def test_render_round_trip_example(self, ex1_template):
        assert parse_formula(render_template(ex1_template)) == ex1_template


@settings(max_examples=300, deadline=None)
@given(templates(), graphs(max_n=5), st.data())
def test_render_parse_round_trip(t, s, data):
    # Rendering flattens nested and single-child connectives, so the round
    # trip is exact on text and semantic on trees.
    text = render_template(t)
    back = parse_formula(text)
    assert render_template(back) == text
    pick = st.sampled_from(s.sorted_universe)
    asg = {"x": data.draw(pick), "y1": data.draw(pick)}
    assert models(s, back.body, asg) == models(s, t.body, asg)


@settings(max_examples=200, deadline=None)
@given(templates(), st.integers(0, 3))
def test_relativisation_is_local_and_idempotent(t, r):
    rel = relativize(t, r)
    assert is_syntactically_local(rel, r)
    assert relativize(rel, r) == rel
    assert quantifier_rank(rel.body) == quantifier_rank(t.body)
    if is_quantifier_free(t.body):
        assert rel == t


@settings(max_examples=120, deadline=None)
@given(templates(depth=2), graphs(max_n=8), st.integers(0, 2), st.data())
def test_relativised_formula_is_decided_by_its_ball(t, s, r, data):
    rel = relativize(t, r)
    tup = (data.draw(st.sampled_from(s.sorted_universe)),)
    params = (data.draw(st.sampled_from(s.sorted_universe)),)
    asg = template_assignment(rel, tup, params)
    view = ball(LocalAccessOracle(s), tup + params, r).view
    assert models(s, rel.body, asg) == models(view, rel.body, asg)


@settings(max_examples=120, deadline=None)
@given(templates(depth=2), graphs(max_n=7), st.integers(0, 2), st.data())
def test_padding_preserves_meaning(t, s, r, data):
    rel = relativize(t, r)
    padded = pad_parameters(rel, 3, r)
    assert padded.ell == 3 and padded.parameter_vars[:1] == rel.parameter_vars
    assert is_syntactically_local(padded, r)
    pick = st.sampled_from(s.sorted_universe)
    tup, params = (data.draw(pick),), tuple(data.draw(pick) for _ in range(3))
    original = models(s, rel.body, template_assignment(rel, tup, params[:1]))
    assert models(s, padded.body, template_assignment(padded, tup, params)) == original
    view = ball(LocalAccessOracle(s), tup + params, r).view
    assert models(view, padded.body, template_assignment(padded, tup, params)) == original


def test_padding_rejects_nonlocal_and_shrinking(ex1_template):
    with pytest.raises(ValueError):
        pad_parameters(ex1_template, 3, 1)
    with pytest.raises(ValueError):
        pad_parameters(relativize(ex1_template, 1), 1, 1)
    assert pad_parameters(relativize(ex1_template, 1), 2, 1) == relativize(ex1_template, 1)


def test_relativize_rejects_rebinding():
    with pytest.raises(ValueError):
        relativize(HypothesisTemplate(("x",), (), Exists("x", RelationAtom("R", ("x",)))), 1)


def test_empty_guard_is_false():
    assert distance_guard((), "z", 1) == FALSE


class TestBoundedSpace:
    def test_atoms(self):
        atoms = atoms_over(GRAPH, ("x", "y1"))
        assert atoms[0] == Equality("x", "y1")
        assert len(atoms) == 1 + 4 + 2

    def test_space_functions_are_distinct(self):
        space = enumerate_bounded_space(GRAPH, 1, 1, 2, cap=500)
        assert render(space[0].body) == "false" and render(space[1].body) == "true"
        assert len({render(t.body) for t in space}) == len(space)
        # 2 constants + 7 atoms * 2 + C(7,2) pairs * 10 functions depending on both
        assert len(space) == 2 + 14 + 21 * 10

    def test_cap(self):
        assert len(enumerate_bounded_space(GRAPH, 1, 0, 3, cap=5)) == 5
