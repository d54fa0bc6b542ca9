from .syntax import Ty, BOOL, INT, REAL, Var, SVar, Lit, Op, Expr, DistExpr, Skip, Null, Assign, Sample, Seq, \
    If, While, Cmd, TypingContext, Param, OpDecl, Program, seq, flatten_seq, normalize, same_command, desugar_bounded, \
    free_vars, written_vars, tag, untag
from .lexer import PWhileSyntaxError
from .optable import OpTable, OpSpec, DistSpec, UnknownOperation, default_optable, program_optable
from .parser import PWhileParser, AdjAtom, parse_program, parse_file, parse_command, parse_expression
from .typecheck import PWhileTypeError, TypeChecker, typecheck, typecheck_program, coerce_value, default_value, \
    initial_memory
from .printer import print_expr, print_cmd, print_program, print_inline, print_value, print_op
