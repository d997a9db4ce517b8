import json
import math
import sys
import textwrap

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expertmine.analyzer import (
    HalsteadCounts,
    MetricVector,
    analyze_coupling,
    analyze_functions,
    analyze_source,
    analyze_tokens,
    control_flow_summary,
    extract_imports,
    get_profile,
    run_external_checker,
)
from expertmine.analyzer.external import parse_checker_output
from expertmine.analyzer.metrics import MAX_FILE_BYTES
from expertmine.analyzer.tokens import tokenize
from expertmine.errors import (
    CheckerProcessFailure,
    CheckerProtocolError,
    ParseFailure,
    ProfileLacksCoupling,
    UnknownProfile,
)


def test_empty_file():
    assert analyze_source("") == MetricVector(cc=0, hv=0.0, hd=0.0, sloc=0)


def test_straight_line_function_has_cc_one():
    assert analyze_source("int f(int a) { int b = a + 1; return b; }").cc == 1


def test_if_and_for_give_cc_three():
    src = "void f(int n) { for (int i = 0; i < n; i++) { if (i) { g(i); } } }"
    assert analyze_source(src).cc == 3


def test_halstead_formulas():
    h = HalsteadCounts(eta1=2, N1=2, eta2=2, N2=2)
    assert (h.length, h.vocabulary) == (4, 4)
    assert h.volume == 8.0
    assert h.difficulty == 1.0
    assert HalsteadCounts(0, 0, 0, 0).volume == 0.0
    assert HalsteadCounts(3, 5, 0, 0).difficulty == 0.0


def test_file_cc_is_max_over_functions():
    src = """
    int a(int x) { return x; }
    int b(int x) { if (x) { return 1; } while (x) { x--; } return 0; }
    """
    fns = analyze_functions(src)
    assert [(f.name, f.cc) for f in fns] == [("a", 1), ("b", 3)]
    assert analyze_source(src).cc == 3


def test_nested_lambda_decisions_belong_to_the_lambda():
    src = """
    function outer(xs) {
      if (xs) { return 0; }
      return xs.map((x) => { if (x > 1) { return x; } return x && 1; });
    }
    """
    fns = {f.name: f.cc for f in analyze_functions(src, "javascript")}
    assert fns["outer"] == 2
    assert sorted(fns.values()) == [2, 3]


def test_comments_and_strings_are_ignored_for_decisions():
    src = 'int f(int x) { /* if while */ // for\n const char *s = "if && ||"; return x; }'
    assert analyze_source(src).cc == 1


def test_java_generic_wildcard_is_not_a_decision():
    src = "class A { int f(List<? extends T> xs, Map<?, ?> m) { return xs.size() > 0 ? 1 : 0; } }"
    assert analyze_source(src, "java").cc == 2


def test_control_structures_are_not_functions():
    src = "int f(int x) { while (x) { x--; } switch (x) { case 1: break; } return x; }"
    assert [f.name for f in analyze_functions(src)] == ["f"]


def test_java_method_with_throws_and_constructor():
    src = textwrap.dedent(
        """
        class A {
          A(int x) { this.x = x; }
          void run() throws IOException, Exception { try { go(); } catch (IOException e) { } }
          Runnable r = new Runnable() { public void run() { } };
        }
        """
    )
    names = [f.name for f in analyze_functions(src, "java")]
    assert names == ["A", "run", "run"]
    assert analyze_source(src, "java").cc == 2


def test_sloc_counts_code_lines_only():
    src = "// header\n\nint f() {\n  /* note\n  more */\n  return 1;\n}\n"
    assert analyze_source(src).sloc == 3


def test_preprocessor_lines_are_not_halstead_tokens():
    with_dir = analyze_tokens("#include <x.h>\n#define N 3\nint f() { return 1; }", get_profile("c-family"))
    without = analyze_tokens("int f() { return 1; }", get_profile("c-family"))
    assert with_dir.halstead == without.halstead


def test_template_strings_and_regex_literals():
    src = "function f(s) { const r = /[(]+/g; return `a ${s} }` + r.test(s); }"
    fns = analyze_functions(src, "javascript")
    assert [f.name for f in fns] == ["f"]


def test_java_text_block():
    src = 'class A { String s = """\n  if ( {\n"""; int f() { return 1; } }'
    assert analyze_source(src, "java").cc == 1


@pytest.mark.parametrize(
    "src",
    ["int f() { return 1; ", "int f() { /* open", 'int f() { return "x; }', "int f() ) {", "int f() { \\x01 }"],
)
def test_malformed_input_raises_parse_failure(src):
    with pytest.raises(ParseFailure):
        analyze_source(src, "c-family")


def test_oversized_file_is_rejected():
    with pytest.raises(ParseFailure):
        analyze_source("x" * (MAX_FILE_BYTES + 1))


def test_unknown_profile():
    with pytest.raises(UnknownProfile):
        analyze_source("", "cobol")


def test_cfg_builder_agrees_on_a_mixed_function():
    src = textwrap.dedent(
        """
        int f(int a, int b) {
          int s = 0;
          for (int i = 0; i < a; i++) {
            switch (i % 3) { case 0: s++; break; case 1: continue; default: s--; }
            if (s > b && b > 0 || a == 2) { return s; }
          }
          do { s = s > 0 ? s - 1 : s; } while (s > 10);
          try { s = g(s); } catch (E e) { s = 0; } finally { s++; }
          return s;
        }
        """
    )
    analysis = analyze_tokens(src, get_profile("c-family"))
    (fn,) = analysis.functions
    summary = control_flow_summary(analysis.tokens, fn, analysis.functions)
    assert summary.cyclomatic == fn.cc == summary.decision_points + 1


# -- coupling ---------------------------------------------------------------

def _java(pkg, name, *imports):
    lines = [f"package {pkg};"] + [f"import {i};" for i in imports] + [f"class {name} {{ }}"]
    return "\n".join(lines)


def test_coupling_single_file():
    assert analyze_coupling({"p/A.java": _java("p", "A")}, "java") == {"p/A.java": (0, 0)}


def test_coupling_one_way_and_mutual():
    files = {"p/A.java": _java("p", "A", "p.B"), "p/B.java": _java("p", "B")}
    assert analyze_coupling(files, "java") == {"p/A.java": (0, 1), "p/B.java": (1, 0)}
    files["p/B.java"] = _java("p", "B", "p.A")
    assert analyze_coupling(files, "java") == {"p/A.java": (1, 1), "p/B.java": (1, 1)}


def test_coupling_wildcard_static_and_external_imports():
    files = {
        "a/A.java": _java("a", "A", "b.*", "java.util.List"),
        "b/B.java": _java("b", "B", "static a.A.helper"),
        "b/C.java": _java("b", "C"),
    }
    assert analyze_coupling(files, "java") == {
        "a/A.java": (1, 2),
        "b/B.java": (1, 1),
        "b/C.java": (1, 0),
    }


def test_coupling_requires_import_analysis():
    with pytest.raises(ProfileLacksCoupling):
        analyze_coupling({"a.c": ""}, "c-family")


def test_import_facts_round_trip():
    facts = extract_imports("p/q/A.java", _java("p.q", "A", "x.Y", "x.Y"), "java")
    assert facts.module == "p.q.A"
    assert facts.imports == ("x.Y",)


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.sampled_from("ABCDEF"), st.sets(st.sampled_from("ABCDEF"), max_size=5), min_size=1))
def test_coupling_sums_balance(graph):
    files = {f"p/{n}.java": _java("p", n, *(f"p.{d}" for d in deps if d in graph)) for n, deps in graph.items()}
    result = analyze_coupling(files, "java")
    assert sum(ca for ca, _ in result.values()) == sum(ce for _, ce in result.values())
    for n, deps in graph.items():
        assert result[f"p/{n}.java"][1] == len({d for d in deps if d in graph} - {n})


# -- external checker -------------------------------------------------------

CHECKER = textwrap.dedent(
    """
    import json, os, sys
    mode = sys.argv[1]
    root = sys.argv[2]
    if mode == "fail":
        sys.stderr.write("boom")
        sys.exit(3)
    if mode == "empty":
        print("[]")
        sys.exit(0)
    out = []
    for d, _, names in os.walk(root):
        for n in sorted(names):
            rel = os.path.relpath(os.path.join(d, n), root).replace(os.sep, "/")
            with open(os.path.join(d, n)) as fh:
                lines = fh.read().count("\\n")
            out.append({"path": rel, "cc": 2, "hv": 80.0, "hd": 4.0, "sloc": lines, "extra": "x"})
    print(json.dumps(out))
    """
)


@pytest.fixture
def checker(tmp_path):
    script = tmp_path / "checker.py"
    script.write_text(CHECKER)
    return lambda mode: [sys.executable, str(script), mode]


def test_external_checker_reports_metrics(checker):
    out = run_external_checker(checker("ok"), [("src/a.x", "1\n2\n3\n4\n5\n6\n7\n8\n9\n10\n")])
    assert out == {"src/a.x": MetricVector(cc=2, hv=80.0, hd=4.0, sloc=10)}
    assert out["src/a.x"].Ca is None and out["src/a.x"].Ce is None


def test_external_checker_empty_and_failure(checker):
    assert run_external_checker(checker("empty"), [("a.x", "")]) == {}
    with pytest.raises(CheckerProcessFailure) as info:
        run_external_checker(checker("fail"), [("a.x", "")])
    assert info.value.returncode == 3


@pytest.mark.parametrize(
    "payload",
    ['{"path": "a"}', "not json", '[{"cc": 1}]', '[{"path": "zzz", "cc": 1}]',
     '[{"path": "a", "cc": "high"}]', '[{"path": "a", "cc": true}]'],
)
def test_checker_protocol_violations(payload):
    with pytest.raises(CheckerProtocolError):
        parse_checker_output(payload, {"a"})


def test_metric_vector_json_and_merge():
    v = MetricVector(cc=3, hv=1.5)
    assert MetricVector.from_json(json.loads(json.dumps(v.to_json()))) == v
    assert v.merged(MetricVector(hv=2.0, Ca=1)) == MetricVector(cc=3, hv=2.0, Ca=1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "1", "+", "*", "x", "2"]), max_size=40))
def test_expression_halstead_invariants(parts):
    src = "int f() { return " + " ".join(parts) + " ; }"
    try:
        analysis = analyze_tokens(src, get_profile("c-family"))
    except ParseFailure:
        return
    h = analysis.halstead
    assert h.eta1 <= h.N1 and h.eta2 <= h.N2
    assert h.volume >= 0 and math.isfinite(h.difficulty)
    assert len(tokenize(src, get_profile("c-family"))) >= h.N1 + h.N2


def test_block_comment_after_directive_spans_lines():
    src = "#define A 1 /* first\n   second ( */\nint f(int a) { if (a) return 1; return 0; }\n"
    (fn,) = analyze_functions(src)
    assert (fn.name, fn.cc) == ("f", 2)


def test_only_first_conditional_branch_is_lexed():
    src = textwrap.dedent("""\
        #ifdef WIDE
        int f(long a,
        #else
        int f(int a,
        #endif
              int b) { return a + b; }
        #if 0
        it's not code (
        #elif 1
        int g(int x) { return x; }
        #else
        int g( {
        #endif
        """)
    assert [fn.name for fn in analyze_functions(src)] == ["f", "g"]
    assert analyze_source(src).cc == 1
