from ..lang.optable import OpTable, default_optable
from ..lang.syntax import Var, SVar, Lit, Op, Expr, DistExpr, Param
from ..mechanisms import Mechanism
from ..aputils import to_fraction
from fractions import Fraction
from typing import Any, Dict, Mapping, Optional
import numpy as np


class EvaluationError(Exception):
    """An exception raised when an expression cannot be evaluated, e.g. an unbound variable or a division
    by zero in exact mode."""
    pass


def param_values(params: Optional[Mapping[str, Any]]) -> Dict[str, Any]:
    """:return: Parameter values keyed by name, accepting either raw values or Param declarations."""
    if not params:
        return {}
    return {name: (value.value if isinstance(value, Param) else value) for name, value in params.items()}


def store_value(old: Any, new: Any) -> Any:
    """Keeps the carrier of a memory cell: an int written into a real cell becomes a rational."""
    if isinstance(old, Fraction) and isinstance(new, int) and not isinstance(new, bool):
        return Fraction(new)
    if isinstance(old, Fraction) and isinstance(new, float):
        return to_fraction(new)
    return new


def evaluate(expr: Expr, memory: Mapping[str, Any], params: Optional[Mapping[str, Any]] = None,
             optable: Optional[OpTable] = None) -> Any:
    """
    Evaluates an expression exactly in a memory.

    :param expr: The (untagged) expression.
    :param memory: The memory.
    :param params: Declared parameter values.
    :param optable: The operation table.
    :return: The value (bool, int, Fraction or tuple).
    """
    optable = optable or default_optable()
    params = params or {}

    def walk(node: Expr) -> Any:
        if isinstance(node, Lit):
            return node.value
        if isinstance(node, (Var, SVar)):
            if node.name in memory:
                return memory[node.name]
            if node.name in params:
                return params[node.name]
            raise EvaluationError(f'The variable `{node.name}` is unbound.')
        if isinstance(node, Op):
            args = [walk(arg) for arg in node.args]
            try:
                return optable.op(node.name).exact(*args)
            except ZeroDivisionError:
                raise EvaluationError(f'Division by zero while evaluating `{node.name}`.')
        raise EvaluationError(f'Cannot evaluate {node!r}.')

    return walk(expr)


def _float_value(value: Any) -> Any:
    if isinstance(value, bool):
        return value
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, tuple):
        return np.asarray([float(item) for item in value])
    return value


def evaluate_vector(expr: Expr, columns: Mapping[str, np.ndarray], size: int,
                    params: Optional[Mapping[str, Any]] = None, optable: Optional[OpTable] = None) -> np.ndarray:
    """
    Evaluates an expression on every trial of a block at once. Reals are doubles here.

    :param expr: The expression.
    :param columns: One array per variable, indexed by trial.
    :param size: The number of trials in the block.
    :param params: Declared parameter values.
    :param optable: The operation table.
    :return: An array with one entry per trial (two-dimensional for vector values).
    """
    optable = optable or default_optable()
    params = params or {}

    def walk(node: Expr) -> Any:
        if isinstance(node, Lit):
            return _float_value(node.value)
        if isinstance(node, (Var, SVar)):
            if node.name in columns:
                return columns[node.name]
            if node.name in params:
                return _float_value(params[node.name])
            raise EvaluationError(f'The variable `{node.name}` is unbound.')
        if isinstance(node, Op):
            return optable.op(node.name).evaluate_vector(*[walk(arg) for arg in node.args])
        raise EvaluationError(f'Cannot evaluate {node!r}.')

    with np.errstate(all='ignore'):
        result = np.asarray(walk(expr))
    if result.ndim == 0:
        return np.full(size, result.item())
    if result.shape[0] != size:
        return np.broadcast_to(result, (size,) + result.shape).copy()
    return result


def build_mechanism(dist: DistExpr, params: Optional[Mapping[str, Any]] = None,
                    optable: Optional[OpTable] = None) -> Mechanism:
    """:return: The mechanism of a distribution expression with its static parameters evaluated."""
    optable = optable or default_optable()
    values = [evaluate(param, {}, params, optable) for param in dist.params]
    return optable.dist(dist.name).build(*values)
