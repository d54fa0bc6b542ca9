from aprhl_toolkit.lang import PWhileParser, PWhileSyntaxError, PWhileTypeError, UnknownOperation, AdjAtom, \
    parse_program, parse_file, parse_expression, print_program, print_expr, BOOL, INT, REAL, Var, SVar, Lit, Op, \
    Assign, Sample, If, While, Skip, Seq, flatten_seq, initial_memory, default_optable, program_optable, print_op
from aprhl_toolkit.measure import Memory
from aprhl_toolkit.semantics import run_program
from aprhl_toolkit.semantics.evaluate import EvaluationError, evaluate_vector
from fractions import Fraction
from typing import List
import numpy as np
import pytest


class TestPWhileParser:
    """Ensures pWHILE source text parses into the expected trees and that malformed input raises
    located errors."""

    corpus: List[str] = [
        'resources/corpus/abovet.pwhile',
        'resources/corpus/laplace_release.pwhile',
        'resources/corpus/gauss_release.pwhile',
        'resources/corpus/cauchy_release.pwhile',
        'resources/corpus/randomized_response.pwhile',
        'resources/corpus/two_releases.pwhile',
        'resources/tests/lang/geometric.pwhile',
        'resources/tests/lang/bounded_counter.pwhile',
        'resources/tests/lang/partial_abort.pwhile',
        'resources/tests/lang/declared_ops.pwhile',
    ]

    def test_abovet_declarations(self):
        """Ensures type, parameter and variable declarations are collected in order."""
        program = parse_file('resources/corpus/abovet.pwhile')
        assert set(program.types) == {'queries', 'data'}
        assert program.types['data'].base == 'vec' and program.types['data'].dim == 3
        assert program.param_values() == {'eps': 1, 't': Fraction(1, 2), 'Q': 3}
        assert program.ctx.names() == ['d', 'T', 'S', 'j', 'r']
        assert isinstance(flatten_seq(program.body)[-1], While)

    def test_sequence_shape(self):
        """Ensures `;` builds a right-nested sequence and a trailing `;` is allowed."""
        program = parse_program('var x : int; x <- 1; x <- 2; x <- 3;')
        assert isinstance(program.body, Seq) and isinstance(program.body.second, Seq)
        assert [part.expr.value for part in flatten_seq(program.body)] == [1, 2, 3]

    def test_sampling(self):
        program = parse_program('param eps : real = 1; var x : real, y : real; y <$ lap(1 / eps)(x)')
        sample = program.body
        assert isinstance(sample, Sample)
        assert sample.dist.name == 'lap'
        assert sample.dist.args == (Var('x'),)

    def test_precedence(self):
        """Ensures multiplication binds tighter than addition and comparisons bind looser than both."""
        expr = parse_expression('1 + 2 * x <= y && true')
        assert expr.name == 'and'
        comparison = expr.args[0]
        assert comparison.name == 'le'
        assert comparison.args[0] == Op('add', (Lit(1, INT), Op('mul', (Lit(2, INT), Var('x')))))

    def test_both_equality_spellings(self):
        assert parse_expression('x == 1') == parse_expression('x = 1')

    def test_decimal_literal(self):
        assert parse_expression('0.25') == Lit(Fraction(1, 4), REAL)

    def test_relational_tags(self):
        """Ensures tags apply to variables and to whole parenthesised expressions."""
        expr = parse_expression('(x + y)<1> = x<2>', relational=True)
        assert expr.args[0] == Op('add', (SVar('x', 1), SVar('y', 1)))
        assert expr.args[1] == SVar('x', 2)

    def test_adjacency_atom(self):
        expr = parse_expression('adj{d} <= 1 ==> r<1> = r<2>', relational=True)
        assert expr.name == 'implies'
        assert expr.args[0] == AdjAtom(('d',), Fraction(1))

    def test_tags_outside_assertions(self):
        """Ensures memory tags are rejected in program text."""
        with pytest.raises(PWhileSyntaxError):
            parse_expression('x<1> + 1')

    def test_chained_comparison(self):
        with pytest.raises(PWhileSyntaxError):
            parse_expression('0 <= x <= 1')

    def test_rational_parameter(self):
        program = parse_program('param p : real = (1 / 3); var b : bool; b <$ bern(p)')
        assert program.param_values()['p'] == Fraction(1, 3)

    def test_parameter_out_of_range(self):
        """Ensures a parameter value must fit its declared type."""
        with pytest.raises(PWhileSyntaxError):
            parse_program('type small = discrete(0, 3); param k : small = 7; var x : int; x <- k')

    def test_syntax_error_location(self):
        """Ensures syntax errors name the line of the offending token."""
        with pytest.raises(PWhileSyntaxError) as error:
            parse_file('resources/tests/lang/bad_syntax.pwhile')
        assert error.value.line == 2

    def test_duplicate_variable(self):
        with pytest.raises(PWhileSyntaxError):
            parse_file('resources/tests/lang/duplicate_variable.pwhile')

    def test_unknown_distribution(self):
        with pytest.raises(UnknownOperation):
            parse_file('resources/tests/lang/unknown_distribution.pwhile')

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            parse_file('resources/tests/lang/nowhere.pwhile')

    @pytest.mark.parametrize('file_path', corpus)
    def test_print_round_trip(self, file_path: str):
        """Ensures printing a program and parsing the text back gives the same program."""
        program = parse_file(file_path)
        assert parse_program(print_program(program)) == program

    @pytest.mark.parametrize('text', [
        '1 + 2 * x',
        '(1 + 2) * x',
        'x - (y - 1)',
        '-x + abs(y)',
        '!(b && c) || d',
        'x / (y * 2)',
        'min(x, 3) >= max(y, -1)',
    ])
    def test_expression_round_trip(self, text: str):
        """Ensures printed expressions keep the parentheses they need and no others."""
        assert print_expr(parse_expression(text)) == text


class TestTypecheck:
    """Ensures ill-typed programs are rejected with the violated typing rule."""

    @pytest.mark.parametrize('file_path, kind', [
        ('resources/tests/lang/unbound_variable.pwhile', 'unbound-variable'),
        ('resources/tests/lang/bad_guard.pwhile', 'guard-not-bool'),
        ('resources/tests/lang/dynamic_scale.pwhile', 'static-parameter'),
        ('resources/tests/lang/bad_assignment.pwhile', 'assignment'),
    ])
    def test_type_errors(self, file_path: str, kind: str):
        with pytest.raises(PWhileTypeError) as error:
            parse_file(file_path)
        assert error.value.kind == kind

    def test_annotations(self):
        """Ensures every expression node carries its inferred type."""
        program = parse_program('var x : int, y : real, b : bool; y <- x / 2; b <- x < 3')
        first, second = flatten_seq(program.body)
        assert first.expr.ty == REAL
        assert second.expr.ty == BOOL

    def test_int_widens_to_real(self):
        program = parse_program('var x : int, y : real; y <- x + 1')
        assert isinstance(program.body, Assign)

    def test_real_does_not_narrow(self):
        with pytest.raises(PWhileTypeError):
            parse_program('var x : int, y : real; x <- y')

    def test_opaque_queries(self):
        """Ensures opaque types only combine with the operations declared over them."""
        header = 'type queries = int; type data = vec_real(2); param Q : queries = 2; var d : data, a : real, n : int;'
        assert isinstance(parse_program(header + 'a <- eval(Q, 1, d)').body, Assign)
        assert parse_program(header + 'n <- size(Q)').body.expr.ty == INT
        with pytest.raises(PWhileTypeError):
            parse_program(header + 'n <- Q + 1')
        with pytest.raises(PWhileTypeError):
            parse_program(header + 'a <- d + 1')

    def test_conditional_guard(self):
        program = parse_program('var x : int; if x > 0 then { x <- 1 } else { skip }')
        assert isinstance(program.body, If)
        assert program.body.orelse == Skip()


class TestOpDeclarations:
    """Ensures operations declared in the prelude are registered, typechecked, evaluated and printed."""

    def test_registered(self):
        program = parse_file('resources/tests/lang/declared_ops.pwhile')
        assert list(program.ops) == ['clip', 'scaled']
        assert program.ops['clip'].sensitivity == ((0, Fraction(1)),)
        assert program.ops['scaled'].sensitivity == ((0, Fraction(2)),)
        assert program.body.expr.ty == REAL
        table = program_optable(program)
        assert table.op('scaled').sensitivity == {0: Fraction(2)}
        assert not default_optable().has_op('clip')

    @pytest.mark.parametrize('x, n, expected', [
        (Fraction(3, 2), 1, 3),
        (Fraction(1, 4), 0, Fraction(1, 2)),
        (-2, 2, 2),
    ])
    def test_exact_evaluation(self, x: Fraction, n: int, expected: Fraction):
        program = parse_file('resources/tests/lang/declared_ops.pwhile')
        result = run_program(program, initial_memory(program.ctx, {'x': x, 'n': n}))
        assert result.dist(Memory({'x': x, 'y': expected, 'n': n})) == 1

    def test_vector_evaluation(self):
        program = parse_file('resources/tests/lang/declared_ops.pwhile')
        columns = {'x': np.array([0.5, 2.0, -1.0]), 'n': np.array([0, 1, 3])}
        values = evaluate_vector(program.body.expr, columns, 3, {}, program_optable(program))
        assert np.allclose(values, [1.0, 3.0, 3.0])

    def test_bodiless(self):
        """Ensures an operation declared without a body typechecks but cannot be run."""
        program = parse_program('op secret(v : real) : real sensitivity {v: 1}; var x : real; x <- secret(x)')
        assert program.ops['secret'].body is None
        with pytest.raises(EvaluationError):
            run_program(program, initial_memory(program.ctx))

    @pytest.mark.parametrize('text', [
        'op abs(v : real) : real = v; var x : real; skip',
        'op f(v : real) : real = v; op f(v : real) : real = v; var x : real; skip',
        'op f(v : real, v : real) : real = v; var x : real; skip',
        'op f(v : real) : real sensitivity {w: 1} = v; var x : real; skip',
        'op f(v : real) : real sensitivity {v: -1} = v; var x : real; skip',
    ])
    def test_malformed(self, text: str):
        with pytest.raises(PWhileSyntaxError):
            parse_program(text)

    def test_body_type(self):
        with pytest.raises(PWhileTypeError) as error:
            parse_file('resources/tests/lang/bad_op_body.pwhile')
        assert error.value.kind == 'op-body'

    def test_argument_types(self):
        with pytest.raises(PWhileTypeError) as error:
            parse_program('op half(v : int) : real = v / 2; var x : real, y : real; y <- half(x)')
        assert error.value.kind == 'signature'

    def test_printed(self):
        program = parse_file('resources/tests/lang/declared_ops.pwhile')
        assert print_op(program.ops['scaled']) == 'op scaled(v : real, w : int) : real sensitivity {v: 2} = ' \
                                                  '2 * clip(v) + w;'
