"""Metric-internal tokenization.

``tokenize_13a`` reproduces the mteval-v13a scheme used by the standard
corpus-BLEU signature: minimal HTML unescaping, punctuation split off
adjacent non-digits, digit-attached dashes split, whitespace collapsed.

``tokenize_ter`` matches the tercom signature used here (lowercased, no
extra normalization, punctuation kept attached), which reduces to
lowercasing plus whitespace splitting.
"""

import re

_13A_RULES = [
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    # period/comma stay glued between digits (decimal and thousand marks)
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    (re.compile(r"([0-9])(-)"), r"\1 \2 "),
]


def tokenize_13a(text: str) -> list[str]:
    line = text.replace("<skipped>", "")
    line = line.replace("-\n", "").replace("\n", " ")
    if "&" in line:
        line = (
            line.replace("&quot;", '"')
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">")
        )
    line = f" {line} "
    for pattern, repl in _13A_RULES:
        line = pattern.sub(repl, line)
    return line.split()


def tokenize_ter(text: str, lowercase: bool = True) -> list[str]:
    if lowercase:
        text = text.lower()
    return text.split()
