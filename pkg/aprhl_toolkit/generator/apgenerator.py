from ..grade import Grade
from ..lang.parser import parse_program, parse_command
from ..lang.syntax import Cmd, Program
from ..measure import SubDist
from fractions import Fraction
from typing import Collection, List, Optional, Sequence, Tuple
from random import Random

# The declarations every generated program shares: small discrete and boolean variables.
FUZZ_PROGRAM: str = '''type small = discrete(0, 2);
var x : small; var y : small; var b : bool; var c : bool;
skip
'''

INT_VARS: Tuple[str, ...] = ('x', 'y')
BOOL_VARS: Tuple[str, ...] = ('b', 'c')


class APGenerator:
    """Randomly generates small discrete pWHILE commands, relational assertions, sub-distributions and
    grades. Commands only use the variables of FUZZ_PROGRAM, keep integers inside their declared range
    and never loop, so their exact semantics is always finite. This does not generate realistic programs,
    but is useful for fuzzing the proof rules and for property tests."""

    def __init__(self, seed: int = -1):
        """
        Instantiates an APGenerator with an optional seed value.

        :param seed: The random seed. Use the same seed to obtain the same objects.
        """
        self._random = Random()
        if seed != -1:
            self._random.seed(seed)
        self._program: Optional[Program] = None

    @property
    def program(self) -> Program:
        """:return: The typed program whose declarations generated commands use."""
        if self._program is None:
            self._program = parse_program(FUZZ_PROGRAM, source='<fuzz>')
        return self._program

    def _generate_int(self, bound: Tuple[int, int]) -> int:
        """
        Generates a random integer within a minimum and maximum bound.

        :param bound: The bounds of generation as a tuple (min_bound, max_bound).
        :return: A random integer within the bounds supplied.
        """
        if bound[0] > bound[1]:
            raise ValueError(f'The lower bound `{bound[0]}` must be less than or '
                             f'equal to the upper bound `{bound[1]}`.')
        return self._random.randint(bound[0], bound[1])

    def chance(self, probability: float) -> bool:
        return self._random.random() < probability

    def choice(self, items: Sequence):
        return self._random.choice(list(items))

    # Expressions:

    def generate_int_expression(self) -> str:
        u, w = self.choice(INT_VARS), self.choice(INT_VARS)
        return self.choice([
            str(self._generate_int((0, 2))),
            u,
            f'min({u} + 1, 2)',
            f'max({u} - 1, 0)',
            f'min({u} + {w}, 2)',
        ])

    def generate_bool_expression(self) -> str:
        u, w = self.choice(BOOL_VARS), self.choice(BOOL_VARS)
        return self.choice([
            self.choice(['true', 'false']),
            u,
            f'!{u}',
            f'{self.choice(INT_VARS)} <= {self._generate_int((0, 1))}',
            f'{u} && {w}',
        ])

    # Commands:

    def generate_statement(self, avoid: Collection[str] = (), sampling: bool = True) -> str:
        """
        :param avoid: Variables the statement must not write.
        :param sampling: Whether sampling statements may be generated.
        :return: The source text of one assignment or sampling statement (`skip` if every variable is
            avoided).
        """
        ints = [name for name in INT_VARS if name not in avoid]
        bools = [name for name in BOOL_VARS if name not in avoid]
        options: List[str] = []
        if ints:
            target = self.choice(ints)
            options.append(f'{target} <- {self.generate_int_expression()}')
            if sampling:
                options.append(f'{target} <$ unif(0, 2)')
        if bools:
            target = self.choice(bools)
            options.append(f'{target} <- {self.generate_bool_expression()}')
            if sampling:
                options.append(f'{target} <$ bern({self.choice(["1/2", "1/3"])})')
                options.append(f'{target} <$ rr({self.choice(["3/4", "2/3"])})({self.choice(BOOL_VARS)})')
        return self.choice(options) if options else 'skip'

    def generate_source(self, size: int, avoid: Collection[str] = (), sampling: bool = True) -> str:
        """
        Generates the source text of a loop-free command with `size` statements; each statement is a
        conditional with probability 1/4.
        """
        statements: List[str] = []
        remaining = max(size, 1)
        while remaining > 0:
            if remaining >= 2 and self.chance(0.25):
                then = self.generate_statement(avoid, sampling)
                orelse = self.generate_statement(avoid, sampling) if self.chance(0.5) else 'skip'
                statements.append(f'if {self.generate_bool_expression()} then {{ {then} }} else {{ {orelse} }}')
                remaining -= 2
            else:
                statements.append(self.generate_statement(avoid, sampling))
                remaining -= 1
        return '; '.join(statements)

    def generate_command(self, size: int, avoid: Collection[str] = (), sampling: bool = True) -> Cmd:
        """:return: A typed command over the FUZZ_PROGRAM declarations; see generate_source."""
        return parse_command(self.generate_source(size, avoid, sampling), self.program)

    def generate_program(self, size: int) -> Program:
        """:return: A typed program with a random body over the FUZZ_PROGRAM declarations."""
        body = self.generate_source(size)
        return parse_program(FUZZ_PROGRAM.replace('skip\n', body + '\n'), source='<generated>')

    # Assertions:

    def generate_atom(self, names: Optional[Collection[str]] = None) -> str:
        """:return: The source text of a relational atom over the given variables (all by default)."""
        ints = [name for name in INT_VARS if names is None or name in names]
        bools = [name for name in BOOL_VARS if names is None or name in names]
        options: List[str] = []
        for name in ints:
            options += [f'{name}<1> = {name}<2>', f'{name}<1> <= {name}<2>', f'{name}<1> != {name}<2>',
                        f'{name}<1> <= {self._generate_int((0, 2))}']
        for name in bools:
            options += [f'{name}<1> = {name}<2>', f'{name}<1> != {name}<2>', f'{name}<1>']
        return self.choice(options) if options else 'true'

    def generate_assertion(self, names: Optional[Collection[str]] = None, atoms: Tuple[int, int] = (0, 2)) -> str:
        """:return: The source text of a conjunction of random atoms (`true` when empty)."""
        parts = [self.generate_atom(names) for _ in range(self._generate_int(atoms))]
        return ' && '.join(parts) if parts else 'true'

    # Distributions and grades:

    def generate_subdist(self, support_bound: int, mass: Fraction = Fraction(1),
                         points: Optional[Sequence] = None) -> SubDist:
        """
        Generates a sub-distribution with exact rational weights.

        :param support_bound: The largest support size.
        :param mass: The total mass (at most 1).
        :param points: The candidate points; integers 0 .. support_bound - 1 by default.
        :return: The sub-distribution.
        """
        if not 0 <= mass <= 1:
            raise ValueError(f'The mass `{mass}` must lie in [0, 1].')
        candidates = list(points) if points is not None else list(range(support_bound))
        size = self._generate_int((1, min(support_bound, len(candidates))))
        chosen = self._random.sample(candidates, size)
        raw = [self._generate_int((1, 8)) for _ in chosen]
        total = sum(raw)
        return SubDist({point: Fraction(weight, total) * mass for point, weight in zip(chosen, raw)})

    def generate_grade(self, gammas: Sequence = (1, 2, 3), deltas: Sequence = (0, Fraction(1, 8))) -> Grade:
        return Grade.from_gamma(self.choice(gammas), self.choice(deltas))
