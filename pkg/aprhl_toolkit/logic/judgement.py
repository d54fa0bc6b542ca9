from .assertion import Assertion, print_assertion
from ..grade import Grade
from ..lang.printer import print_inline
from ..lang.syntax import Cmd
from dataclasses import dataclass
from typing import Any, Dict


@dataclass(frozen=True)
class Judgement:
    """The apRHL judgement left ~(γ,δ) right : pre ⇒ post."""

    left: Cmd
    """The command run on the first memory."""

    right: Cmd
    """The command run on the second memory."""

    pre: Assertion
    """The precondition Ψ."""

    post: Assertion
    """The postcondition Φ."""

    grade: Grade
    """The privacy grade (γ, δ)."""

    endo: bool = False
    """True for endorelational judgements, whose postcondition is read through the endorelational lifting."""

    def describe(self) -> str:
        relation = '~endo' if self.endo else '~'
        return (f'{print_inline(self.left)} {relation} {print_inline(self.right)} : '
                f'{print_assertion(self.pre)} ==> {print_assertion(self.post)} @ {self.grade}')

    def to_record(self) -> Dict[str, Any]:
        return {
            'left': print_inline(self.left),
            'right': print_inline(self.right),
            'pre': print_assertion(self.pre),
            'post': print_assertion(self.post),
            'grade': self.grade.to_record(),
            'endo': self.endo,
        }
