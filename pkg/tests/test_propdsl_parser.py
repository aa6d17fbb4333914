import pytest

from propforge.propdsl import (
    And,
    Attr,
    Cmp,
    Do,
    Exists,
    If,
    LetAll,
    LetPick,
    Lit,
    Not,
    Or,
    ParseError,
    PropertyAST,
    Selector,
    SelectorClause,
    Var,
    parse_property,
    print_property,
)
from conftest import corpus_paths

MINIMAL = 'property p { pre { true } run { press_back() } post { assert true } }'

FIG1 = """
property open_directory {
  pre {
    exists(widget(id="app:id/file_item")) and exists(widget(desc="Search"))
  }
  run {
    let items = find_all widget(id="app:id/file_item")
    let item = pick from items where not contains(attr(elem, "text"), ".")
    click(item)
  }
  post {
    assert contains(attr(widget(id="app:id/path_bar"), "text"), attr(item, "text"))
  }
}
"""


def test_parse_minimal():
    ast = parse_property(MINIMAL)
    assert ast.name == "p"
    assert ast.precondition == Lit(True)
    assert len(ast.interaction) == 1
    assert isinstance(ast.interaction[0], Do)
    assert ast.interaction[0].action.kind == "press_back"
    assert ast.postcondition == (Lit(True),)


def test_parse_directory_property_shape():
    ast = parse_property(FIG1)
    # precondition: one conjunction of two exists clauses
    assert isinstance(ast.precondition, And)
    assert isinstance(ast.precondition.left, Exists)
    assert isinstance(ast.precondition.right, Exists)
    # interaction: collect, pick, click
    assert len(ast.interaction) == 3
    let_all, let_pick, do = ast.interaction
    assert isinstance(let_all, LetAll) and let_all.var == "items"
    assert isinstance(let_pick, LetPick) and let_pick.source == "items"
    assert isinstance(let_pick.predicate, Not)
    inner = let_pick.predicate.operand
    assert isinstance(inner, Cmp) and inner.op == "contains"
    assert inner.left == Attr(Var("elem"), "text")
    assert inner.right == Lit(".")
    assert isinstance(do, Do) and do.action.kind == "click" and do.action.target == "item"
    # postcondition: single path-contains assertion
    assert len(ast.postcondition) == 1
    post = ast.postcondition[0]
    assert isinstance(post, Cmp) and post.op == "contains"
    assert post.left == Attr(Selector((SelectorClause("id", "app:id/path_bar"),)), "text")
    assert post.right == Attr(Var("item"), "text")


def test_parse_missing_post_block_names_section():
    src = 'property p { pre { true } run { press_back() } }'
    with pytest.raises(ParseError) as err:
        parse_property(src)
    assert "post" in str(err.value)


def test_parse_error_carries_line_and_column():
    src = 'property p {\n  pre { true }\n  run { press_back() }\n  post { assert ## }\n}'
    with pytest.raises(ParseError) as err:
        parse_property(src)
    assert err.value.pos.line == 4


def test_parse_run_without_action_rejected():
    src = 'property p { pre { true } run { let xs = find_all widget(text="a") } post { assert true } }'
    with pytest.raises(ParseError, match="at least one action"):
        parse_property(src)


def test_parse_wait_duration_bounds():
    ok = parse_property('property p { pre { true } run { wait(10) } post { assert true } }')
    assert ok.interaction[0].action.duration == 10.0
    for bad in ("0", "11", "0.0"):
        with pytest.raises(ParseError, match="duration"):
            parse_property(
                f'property p {{ pre {{ true }} run {{ wait({bad}) }} post {{ assert true }} }}'
            )


def test_parse_reserved_words_rejected_as_names():
    with pytest.raises(ParseError, match="reserved"):
        parse_property('property pre { pre { true } run { press_back() } post { assert true } }')
    with pytest.raises(ParseError, match="reserved"):
        parse_property(
            'property p { pre { true } run { let assert = find_all widget(text="x") press_back() } post { assert true } }'
        )


def test_parse_selector_variants():
    ast = parse_property(
        'property p { pre { exists(widget(text~="Down", id="x")) } run { press_back() } post { assert true } }'
    )
    sel = ast.precondition.selector
    assert sel.clauses == (
        SelectorClause("text", "Down", True),
        SelectorClause("id", "x", False),
    )


def test_parse_mode_contains_sugar_applies_to_all_clauses():
    ast = parse_property(
        'property p { pre { exists(widget(text="Down", desc="row", mode=contains)) } '
        'run { press_back() } post { assert true } }'
    )
    sel = ast.precondition.selector
    assert all(c.contains for c in sel.clauses)
    assert [c.field for c in sel.clauses] == ["text", "desc"]
    # sugar canonicalizes to per-clause ~= so the round-trip stays stable
    assert 'text~="Down"' in print_property(ast)


def test_parse_unknown_selector_field():
    with pytest.raises(ParseError, match="selector field"):
        parse_property(
            'property p { pre { exists(widget(nope="x")) } run { press_back() } post { assert true } }'
        )


def test_parse_empty_selector_value():
    with pytest.raises(ParseError, match="non-empty"):
        parse_property(
            'property p { pre { exists(widget(text="")) } run { press_back() } post { assert true } }'
        )


def test_parse_string_escapes():
    ast = parse_property(
        'property p { pre { equals("a\\"b\\\\c\\nd\\te", "x") } run { press_back() } post { assert true } }'
    )
    lit = ast.precondition.left
    assert lit == Lit('a"b\\c\nd\te')


def test_parse_boolean_precedence():
    ast = parse_property(
        'property p { pre { true or false and not true } run { press_back() } post { assert true } }'
    )
    pre = ast.precondition
    # or binds loosest: Or(true, And(false, Not(true)))
    assert isinstance(pre, Or)
    assert pre.left == Lit(True)
    assert isinstance(pre.right, And)
    assert isinstance(pre.right.right, Not)


def test_parse_and_chains_left_nested():
    ast = parse_property(
        'property p { pre { true and false and true } run { press_back() } post { assert true } }'
    )
    pre = ast.precondition
    assert isinstance(pre, And)
    assert isinstance(pre.left, And)
    assert pre.right == Lit(True)


@pytest.mark.parametrize("path", corpus_paths(), ids=lambda p: p.stem)
def test_roundtrip_corpus(path):
    source = path.read_text(encoding="utf-8")
    ast = parse_property(source)
    printed = print_property(ast)
    reparsed = parse_property(printed)
    assert reparsed == ast
    # printing is a fixpoint once canonical
    assert print_property(reparsed) == printed


def test_corpus_is_large_enough_and_varied():
    paths = corpus_paths()
    assert len(paths) >= 20
    sources = [p.read_text(encoding="utf-8") for p in paths]
    asts = [parse_property(s) for s in sources]

    def has_nested_if(stmts):
        from propforge.propdsl import If, walk_statements
        for stmt in stmts:
            if isinstance(stmt, If):
                for inner in list(walk_statements(stmt.then_body)) + list(
                    walk_statements(stmt.else_body or ())
                ):
                    if isinstance(inner, If):
                        return True
        return False

    assert any(has_nested_if(ast.interaction) for ast in asts)
    from propforge.propdsl import LetPick, walk_statements
    assert any(
        isinstance(s, LetPick) and not isinstance(s.predicate, Lit)
        for ast in asts
        for s in walk_statements(ast.interaction)
    )


def test_canonical_print_shape():
    ast = parse_property(MINIMAL)
    assert print_property(ast) == (
        "property p {\n"
        "  pre {\n"
        "    true\n"
        "  }\n"
        "  run {\n"
        "    press_back()\n"
        "  }\n"
        "  post {\n"
        "    assert true\n"
        "  }\n"
        "}\n"
    )


def test_print_preserves_or_in_and_parens():
    ast = parse_property(
        'property p { pre { (true or false) and true } run { press_back() } post { assert true } }'
    )
    printed = print_property(ast)
    assert "(true or false) and true" in printed
    assert parse_property(printed) == ast
