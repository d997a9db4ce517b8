"""Language profiles for the built-in brace-block analyzer."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import UnknownProfile

# Keywords that take part in computation or control flow count as Halstead operators.
OPERATOR_KEYWORDS = frozenset(
    {
        "if", "else", "for", "while", "do", "switch", "case", "default", "break",
        "continue", "return", "throw", "try", "catch", "finally", "new", "delete",
        "typeof", "instanceof", "sizeof", "goto", "yield", "await", "in", "assert",
    }
)

LITERAL_KEYWORDS = frozenset(
    {"true", "false", "null", "nullptr", "undefined", "this", "super", "NaN", "Infinity"}
)

# Declarations, types and modifiers: neither operator nor operand.
DECLARATION_KEYWORDS = frozenset(
    {
        "int", "long", "short", "char", "float", "double", "void", "boolean", "bool",
        "byte", "unsigned", "signed", "const", "static", "final", "public", "private",
        "protected", "abstract", "class", "interface", "enum", "struct", "union",
        "extends", "implements", "import", "package", "var", "let", "function",
        "typedef", "extern", "volatile", "register", "auto", "inline", "native",
        "synchronized", "transient", "strictfp", "throws", "export", "async",
        "namespace", "using", "template", "typename", "virtual", "override",
        "noexcept", "explicit", "friend", "operator", "mutable", "constexpr",
    }
)

DECISION_KEYWORDS = frozenset({"if", "for", "while", "case", "catch"})
DECISION_OPERATORS = frozenset({"&&", "||"})

# Keywords that can precede ``(...) {`` without opening a function body.
NON_FUNCTION_HEADS = frozenset(
    {"if", "for", "while", "switch", "catch", "synchronized", "with", "return", "typeof"}
)


@dataclass(frozen=True)
class Profile:
    name: str
    extensions: frozenset
    preprocessor: bool = False
    regex_literals: bool = False
    template_strings: bool = False
    text_blocks: bool = False
    import_analysis: bool = False
    non_keywords: frozenset = frozenset()

    @property
    def keywords(self) -> frozenset:
        return (OPERATOR_KEYWORDS | LITERAL_KEYWORDS | DECLARATION_KEYWORDS) - self.non_keywords

    def handles(self, path: str) -> bool:
        dot = path.rfind(".")
        return dot > path.rfind("/") and path[dot:].lower() in self.extensions


PROFILES = {
    "c-family": Profile(
        name="c-family",
        extensions=frozenset(
            {".c", ".h", ".cc", ".cpp", ".cxx", ".hpp", ".hh", ".cs", ".java", ".js",
             ".mjs", ".cjs", ".go", ".swift", ".kt", ".scala", ".php"}
        ),
        preprocessor=True,
        regex_literals=True,
        template_strings=True,
    ),
    "java": Profile(
        name="java",
        extensions=frozenset({".java"}),
        text_blocks=True,
        import_analysis=True,
        non_keywords=frozenset(
            {"in", "typeof", "delete", "undefined", "let", "function", "await", "async",
             "export", "NaN", "Infinity", "nullptr", "sizeof", "struct", "union",
             "typedef", "extern", "register", "auto", "inline", "signed", "unsigned",
             "namespace", "using", "template", "typename", "virtual", "override",
             "noexcept", "explicit", "friend", "operator", "mutable", "constexpr", "bool"}
        ),
    ),
    "javascript": Profile(
        name="javascript",
        extensions=frozenset({".js", ".mjs", ".cjs", ".jsx"}),
        regex_literals=True,
        template_strings=True,
        non_keywords=frozenset(
            {"int", "long", "short", "char", "float", "double", "boolean", "bool", "byte",
             "unsigned", "signed", "final", "abstract", "native", "synchronized",
             "transient", "strictfp", "throws", "struct", "union", "typedef", "register",
             "auto", "inline", "sizeof", "nullptr", "namespace", "using", "template",
             "typename", "virtual", "override", "noexcept", "explicit", "friend",
             "operator", "mutable", "constexpr", "volatile", "extern", "assert", "goto"}
        ),
    ),
}


def get_profile(name: str) -> Profile:
    try:
        return PROFILES[name]
    except KeyError:
        raise UnknownProfile(f"unknown language profile {name!r}") from None
