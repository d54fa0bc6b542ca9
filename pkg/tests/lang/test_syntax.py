from aprhl_toolkit.lang import parse_program, parse_command, desugar_bounded, free_vars, written_vars, \
    same_command, normalize, seq, flatten_seq, tag, untag, print_inline, TypingContext, INT, REAL, Var, SVar, \
    Op, Skip, Null, Assign, Seq, If, While
from aprhl_toolkit.lang.syntax import commands_of
import pytest


class TestCommands:
    """Ensures the command helpers (sequencing, normalisation, unrolling) build the expected trees."""

    loop = parse_program('var x : int; while x > 0 do { x <- x - 1 }').body

    def test_seq_of_nothing(self):
        assert seq() == Skip()

    def test_seq_nests_right(self):
        a, b, c = Assign('x', Var('y')), Skip(), Null()
        assert seq(a, b, c) == Seq(a, Seq(b, c))
        assert flatten_seq(Seq(Seq(a, b), c)) == [a, b, c]

    def test_same_command_ignores_association(self):
        a, b, c = Assign('x', Var('y')), Skip(), Null()
        assert same_command(Seq(Seq(a, b), c), Seq(a, Seq(b, c)))
        assert not same_command(Seq(a, b), Seq(b, a))
        assert normalize(Seq(Seq(a, b), c)) == seq(a, b, c)

    def test_unroll_zero(self):
        """Ensures the zero-th unrolling aborts whenever the guard holds."""
        assert desugar_bounded(self.loop, 0) == If(self.loop.guard, Null(), Skip())

    def test_unroll_two(self):
        unrolled = desugar_bounded(self.loop, 2)
        inner = If(self.loop.guard, Seq(self.loop.body, If(self.loop.guard, Null(), Skip())), Skip())
        assert unrolled == If(self.loop.guard, Seq(self.loop.body, inner), Skip())

    def test_unroll_rejects(self):
        with pytest.raises(ValueError):
            desugar_bounded(self.loop, -1)
        with pytest.raises(ValueError):
            desugar_bounded(Skip(), 1)

    def test_commands_of_preorder(self):
        program = parse_program('var x : int; x <- 1; if x > 0 then { skip } else { null }')
        kinds = [type(command).__name__ for command in commands_of(program.body)]
        assert kinds == ['Seq', 'Assign', 'If', 'Skip', 'Null']


class TestVariables:
    """Ensures free and written variables are computed syntactically, with parameters excluded."""

    program = parse_program('param k : int = 2; var x : int, y : int, z : int, b : bool;'
                            'if b then { x <- y + k } else { z <$ unif(0, k) }')

    def test_free_vars(self):
        assert free_vars(self.program.body, self.program.params) == {'b', 'x', 'y', 'z'}

    def test_free_vars_of_expression(self):
        assert free_vars(Op('add', (Var('x'), Var('k'))), ['k']) == {'x'}

    def test_written_vars(self):
        assert written_vars(self.program.body) == {'x', 'z'}

    def test_written_vars_of_loop(self):
        command = parse_command('while b do { x <- 1; b <- false }', self.program)
        assert written_vars(command) == {'x', 'b'}

    def test_tag_and_untag(self):
        expr = Op('add', (Var('x'), Var('y')))
        tagged = tag(expr, 2)
        assert tagged == Op('add', (SVar('x', 2), SVar('y', 2)))
        assert untag(tagged) == expr


class TestTypingContext:
    """Ensures typing contexts keep their order and reject repeated names."""

    def test_order(self):
        ctx = TypingContext([('b', INT), ('a', REAL)])
        assert ctx.names() == ['b', 'a']
        assert ctx['a'] == REAL
        assert ctx.get('c') is None
        assert 'b' in ctx and len(ctx) == 2

    def test_duplicate(self):
        with pytest.raises(ValueError):
            TypingContext([('a', INT), ('a', REAL)])

    def test_print_inline(self):
        program = parse_program('var x : int; while x > 0 do { x <- x - 1 }')
        assert print_inline(program.body) == 'while x > 0 do { x <- x - 1 }'
