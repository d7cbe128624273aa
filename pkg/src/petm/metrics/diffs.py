"""Word-level diff and the marking-edit / unmarking-edit counts.

The diff is a minimal unit-cost edit script between the original
hypothesis tokens and a revised output. A hypothesis token counts as
"edited" when the script substitutes or deletes it; insertions touch no
original token. Combined with the OK/BAD marking vector this yields ME
(fraction of BAD tokens edited) and UE (fraction of OK tokens edited).
"""

import enum
from dataclasses import dataclass

from ..errors import LengthMismatch
from ..records import BAD


class EditOp(str, enum.Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class EditStep:
    op: EditOp
    original_index: int | None
    revised_index: int | None


def word_diff(
    original: list[str], revised: list[str], case_sensitive: bool = True
) -> list[EditStep]:
    """Minimal edit script turning ``original`` into ``revised``.

    Backtrace prefers match, then substitute, then delete, then insert,
    giving one canonical script among cost ties.
    """
    a = original if case_sensitive else [t.lower() for t in original]
    b = revised if case_sensitive else [t.lower() for t in revised]
    n, m = len(a), len(b)

    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    for j in range(m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            dist[i][j] = min(
                dist[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
                dist[i - 1][j] + 1,
                dist[i][j - 1] + 1,
            )

    steps: list[EditStep] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and a[i - 1] == b[j - 1] and dist[i][j] == dist[i - 1][j - 1]:
            steps.append(EditStep(EditOp.MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            steps.append(EditStep(EditOp.SUBSTITUTE, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            steps.append(EditStep(EditOp.DELETE, i - 1, None))
            i -= 1
        else:
            steps.append(EditStep(EditOp.INSERT, None, j - 1))
            j -= 1
    steps.reverse()
    return steps


def apply_script(script: list[EditStep], original: list[str], revised: list[str]) -> list[str]:
    """Replay a script against ``original``, drawing inserted and substituted
    tokens from ``revised``. The result must equal ``revised``."""
    out: list[str] = []
    for step in script:
        if step.op is EditOp.MATCH:
            out.append(original[step.original_index])
        elif step.op in (EditOp.SUBSTITUTE, EditOp.INSERT):
            out.append(revised[step.revised_index])
        # deletions emit nothing
    return out


def edit_count(script: list[EditStep]) -> int:
    return sum(1 for step in script if step.op is not EditOp.MATCH)


@dataclass(frozen=True)
class MEUECounts:
    me_num: int
    me_den: int
    ue_num: int
    ue_den: int

    @property
    def me_percent(self) -> float | None:
        return 100.0 * self.me_num / self.me_den if self.me_den else None

    @property
    def ue_percent(self) -> float | None:
        return 100.0 * self.ue_num / self.ue_den if self.ue_den else None

    def __add__(self, other: "MEUECounts") -> "MEUECounts":
        return MEUECounts(
            self.me_num + other.me_num,
            self.me_den + other.me_den,
            self.ue_num + other.ue_num,
            self.ue_den + other.ue_den,
        )


def me_ue(
    original_tokens: list[str],
    markings: list[int],
    revised_tokens: list[str],
    case_sensitive: bool = True,
) -> MEUECounts:
    """Count edited tokens split by their OK/BAD marking."""
    if len(original_tokens) != len(markings):
        raise LengthMismatch(
            f"{len(original_tokens)} tokens vs {len(markings)} marks"
        )
    script = word_diff(original_tokens, revised_tokens, case_sensitive=case_sensitive)
    me_num = me_den = ue_num = ue_den = 0
    for step in script:
        if step.original_index is None:
            continue
        edited = step.op in (EditOp.SUBSTITUTE, EditOp.DELETE)
        if markings[step.original_index] == BAD:
            me_den += 1
            me_num += edited
        else:
            ue_den += 1
            ue_num += edited
    return MEUECounts(me_num, me_den, ue_num, ue_den)
