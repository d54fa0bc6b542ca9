from .rules import Rule, ProofError
from ..config import RunConfig
from ..grade import Grade
from ..lang.optable import OpTable, default_optable, program_optable
from ..lang.parser import parse_file
from ..lang.syntax import Program
from ..mechanisms import Certificate, MechanismError, certify_named
from ..records import RecordReader, RecordSyntaxError, Value, Field
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Tuple
import logging
import os

logger = logging.getLogger(__name__)

SCRIPT_VERSIONS: Tuple[int, ...] = (1,)


@dataclass(frozen=True)
class Text:
    """An assertion, expression or command written as a string in a script, with the script constants in
    scope where it was written."""

    value: str
    scope: Tuple[Tuple[str, Any], ...] = ()
    location: str = '<script>'

    def constants(self) -> Dict[str, Any]:
        return dict(self.scope)


@dataclass
class ProofNode:
    rule: str
    """The rule name as written in the script."""

    params: Dict[str, Any]
    """The evaluated parameters; strings become Text."""

    children: List['ProofNode'] = field(default_factory=list)
    location: str = '<script>'


@dataclass
class Goal:
    pre: Text
    post: Text
    grade: Grade
    """The claimed grade of the whole derivation."""

    left: Optional[Text] = None
    """The first command; the program body when absent."""

    right: Optional[Text] = None


@dataclass
class ProofScript:
    version: int
    program: Program
    """The program, with the script's parameter values applied."""

    program_path: str
    params: Dict[str, Any]
    """The script parameters after overrides."""

    certificates: Dict[str, Certificate]
    goal: Goal
    proof: ProofNode
    source: str


# Parsed, unexpanded proof nodes:

@dataclass(frozen=True)
class _RuleNode:
    name: str
    fields: Tuple[Field, ...]
    children: Tuple[Any, ...]
    location: str


@dataclass(frozen=True)
class _Family:
    variable: str
    low: Value
    high: Value
    children: Tuple[Any, ...]


@dataclass(frozen=True)
class _Select:
    condition: Value
    then: Tuple[Any, ...]
    orelse: Tuple[Any, ...]


@dataclass(frozen=True)
class _Use:
    name: str
    fields: Tuple[Field, ...]
    location: str


@dataclass(frozen=True)
class _Define:
    args: Tuple[str, ...]
    body: Any


def to_grade(value: Any, what: str = 'grade') -> Grade:
    """:return: A grade from a script value: a Grade or a pair (ε, δ) with ε = ln γ."""
    if isinstance(value, Grade):
        return value
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return Grade(value[0], value[1])
    raise ValueError(f'The {what} {value!r} must be a pair (eps, delta).')


def _gamma(gamma: Any, delta: Any = 0) -> Grade:
    return Grade.from_gamma(gamma, delta)


def _uniform(grade: Any) -> Grade:
    return to_grade(grade)


SCRIPT_BUILTINS = {'gamma': _gamma, 'uniform': _uniform}


class ScriptLoader:
    """
    Reads a proof script: the header, the program reference, parameters, constants, certificates,
    definitions, the goal and the proof tree. The tree is expanded (families, selections and uses
    resolved) into ProofNodes.
    """

    def __init__(self, text: str, source: str = '<script>', base_dir: str = '.',
                 overrides: Optional[Mapping[str, Any]] = None, config: Optional[RunConfig] = None,
                 optable: Optional[OpTable] = None):
        self.reader: RecordReader = RecordReader(text, source)
        self.source: str = source
        self.base_dir: str = base_dir
        self.overrides: Dict[str, Any] = dict(overrides or {})
        self.config: RunConfig = config or RunConfig()
        self.optable: OpTable = optable or default_optable()
        self.env: Dict[str, Any] = {}
        self.constants: Dict[str, Any] = {}
        self.defines: Dict[str, _Define] = {}
        self.certificates: Dict[str, Certificate] = {}
        self.params: Dict[str, Any] = {}
        self.program: Optional[Program] = None
        self.program_path: str = ''

    def error(self, message: str, token=None) -> RecordSyntaxError:
        return self.reader.error(message, token)

    def evaluate(self, value: Value, env: Optional[Mapping[str, Any]] = None) -> Any:
        return self.reader.evaluate(value, self.env if env is None else env, SCRIPT_BUILTINS)

    def load(self) -> ProofScript:
        version = self.reader.header('aprhl', SCRIPT_VERSIONS)
        stream = self.reader.stream
        goal: Optional[Goal] = None
        proof: Optional[ProofNode] = None
        while not self.reader.at_end():
            keyword, token = self.reader.name()
            if keyword == 'program':
                self._program(stream.expect_kind('string', 'a program path'))
            elif keyword in ('param', 'let'):
                name = stream.expect_kind('ident', 'a name')
                stream.expect('=')
                value = self.reader.value()
                self._bind(keyword, name.text, value, name)
            elif keyword == 'certificate':
                self._certificate()
            elif keyword == 'define':
                name = stream.expect_kind('ident', 'a definition name')
                stream.expect('(')
                args: List[str] = []
                while not stream.at(')'):
                    args.append(stream.expect_kind('ident', 'an argument name').text)
                    if not stream.accept(','):
                        break
                stream.expect(')')
                self.defines[name.text] = _Define(tuple(args), self._node())
            elif keyword == 'goal':
                goal = self._goal(self.reader.fields(), token)
            elif keyword == 'proof':
                self._require_program(token)
                nodes = self._expand(self._node(), self.env)
                if len(nodes) != 1:
                    raise self.error(f'The proof must expand to one node, found {len(nodes)}.', token)
                proof = nodes[0]
            else:
                raise self.error(f'Unknown item `{keyword}`; expected program, param, let, certificate, define, '
                                 f'goal or proof.', token)
        if goal is None or proof is None:
            raise self.error('The script needs a `goal(...)` and a `proof`.')
        for name in self.overrides:
            if name not in self.params:
                logger.warning('The parameter override `%s` does not match a script parameter.', name)
        return ProofScript(version, self.program, self.program_path, dict(self.params), dict(self.certificates),
                           goal, proof, self.source)

    # Items:

    def _program(self, token) -> None:
        path = token.value if os.path.isabs(token.value) else os.path.join(self.base_dir, token.value)
        if not os.path.isfile(path):
            raise self.error(f'The program file {path} does not exist.', token)
        self.program = parse_file(path, self.optable)
        self.optable = program_optable(self.program, self.optable)
        self.program_path = path
        self.env.update(self.program.param_values())
        self.params.update({name: value for name, value in self.overrides.items() if name in self.program.params})
        self._apply_params()

    def _require_program(self, token) -> Program:
        if self.program is None:
            raise self.error('The script must name its `program` first.', token)
        return self.program

    def _bind(self, keyword: str, name: str, value: Value, token) -> None:
        result = self.evaluate(value)
        if keyword == 'param':
            result = self.overrides.get(name, result)
            self.params[name] = result
            self._apply_params()
        elif self.program is not None and name in self.program.params:
            raise self.error(f'`let {name}` would shadow a program parameter.', token)
        else:
            self.constants[name] = result
        self.env[name] = result

    def _apply_params(self) -> None:
        if self.program is None:
            return
        shared = {name: value for name, value in self.params.items() if name in self.program.params}
        if shared:
            try:
                self.program = self.program.with_params(shared)
            except ValueError as error:
                raise self.error(str(error))
            self.env.update(self.program.param_values())

    def _certificate(self) -> None:
        stream = self.reader.stream
        name = stream.expect_kind('ident', 'a certificate name')
        stream.expect('=')
        kind, token = self.reader.name()
        values = {item.name: self.evaluate(item.value) for item in self.reader.fields()}
        radius = values.pop('r', 1)
        try:
            certificate = certify_named(kind, values, radius, self.config.grid)
        except (MechanismError, ValueError, KeyError) as error:
            raise self.error(f'Cannot build the certificate `{name.text}`: {error}', token)
        self.certificates[name.text] = certificate
        self.env[name.text] = certificate

    def _goal(self, fields: List[Field], token) -> Goal:
        values = {item.name: self.evaluate(item.value) for item in fields}
        unknown = set(values) - {'pre', 'post', 'grade', 'left', 'right'}
        if unknown:
            raise self.error(f'Unknown goal fields {sorted(unknown)}.', token)
        for required in ('pre', 'post', 'grade'):
            if required not in values:
                raise self.error(f'The goal needs `{required}`.', token)
        location = self.reader.location(token)
        try:
            grade = to_grade(values['grade'], 'goal grade')
        except ValueError as error:
            raise self.error(str(error), token)
        text = {name: self._text(value, self.env, location) if isinstance(value, str) else value
                for name, value in values.items() if name != 'grade'}
        return Goal(text['pre'], text['post'], grade, text.get('left'), text.get('right'))

    def _text(self, value: str, env: Mapping[str, Any], location: str) -> Text:
        hidden = set(self.program.params) if self.program is not None else set()
        scope = tuple(sorted((name, item) for name, item in env.items()
                             if name not in hidden and isinstance(item, (bool, int, float, Fraction))))
        return Text(value, scope, location)

    # Proof trees:

    def _node(self) -> Any:
        stream = self.reader.stream
        token = stream.peek()
        location = self.reader.location(token)
        if stream.accept('family'):
            variable = stream.expect_kind('ident', 'a family index').text
            stream.expect('in')
            low = self.reader.value()
            stream.expect('..')
            high = self.reader.value()
            return _Family(variable, low, high, self._block())
        if stream.accept('select'):
            condition = self.reader.value()
            then = self._block()
            orelse: Tuple[Any, ...] = ()
            if stream.accept('else'):
                orelse = self._block()
            return _Select(condition, then, orelse)
        if stream.accept('use'):
            name = stream.expect_kind('ident', 'a definition name').text
            return _Use(name, tuple(self.reader.fields()), location)
        name, token = self.reader.name()
        fields = tuple(self.reader.fields())
        children = self._block() if stream.at('{') else ()
        return _RuleNode(name, fields, children, location)

    def _block(self) -> Tuple[Any, ...]:
        stream = self.reader.stream
        stream.expect('{')
        nodes: List[Any] = []
        while not stream.at('}'):
            if stream.at_kind('eof'):
                raise self.error('Unterminated block; expected `}`.')
            nodes.append(self._node())
            stream.accept(';')
        stream.expect('}')
        return tuple(nodes)

    def _expand(self, node: Any, env: Mapping[str, Any]) -> List[ProofNode]:
        if isinstance(node, _Family):
            result: List[ProofNode] = []
            for k in self.reader.range_of(node.low, node.high, env):
                scoped = {**env, node.variable: k}
                for child in node.children:
                    result.extend(self._expand(child, scoped))
            return result
        if isinstance(node, _Select):
            chosen = node.then if self.evaluate(node.condition, env) else node.orelse
            return [expanded for child in chosen for expanded in self._expand(child, env)]
        if isinstance(node, _Use):
            if node.name not in self.defines:
                raise ProofError(f'Unknown definition `{node.name}`.', node.location)
            define = self.defines[node.name]
            values = {item.name: self.evaluate(item.value, env) for item in node.fields}
            missing = set(define.args) - set(values)
            if missing:
                raise ProofError(f'`use {node.name}` misses the arguments {sorted(missing)}.', node.location)
            return self._expand(define.body, {**env, **values})
        try:
            Rule.named(node.name)
        except ProofError:
            raise ProofError(f'Unknown rule `{node.name}`; expected one of {[rule.script_name for rule in Rule]}.',
                             node.location)
        params: Dict[str, Any] = {}
        for item in node.fields:
            value = self.evaluate(item.value, env)
            params[item.name] = self._text(value, env, node.location) if isinstance(value, str) else value
        children = [expanded for child in node.children for expanded in self._expand(child, env)]
        return [ProofNode(node.name, params, children, node.location)]


def load_script(path: str, overrides: Optional[Mapping[str, Any]] = None, config: Optional[RunConfig] = None,
                optable: Optional[OpTable] = None) -> ProofScript:
    """
    Loads and expands a proof script file. The program path inside the script is resolved relative to
    the script's directory.

    :param path: The .aprhl file.
    :param overrides: Values replacing the script's `param` defaults, e.g. {'eps': 0.5}.
    :param config: The run configuration (grid settings for certificates).
    :param optable: The operation table.
    :return: The expanded script.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f'The proof script {path} does not exist.')
    with open(path, 'r', encoding='utf-8') as script_file:
        text = script_file.read()
    return ScriptLoader(text, path, os.path.dirname(os.path.abspath(path)), overrides, config, optable).load()


def parse_script(text: str, base_dir: str = '.', overrides: Optional[Mapping[str, Any]] = None,
                 config: Optional[RunConfig] = None, optable: Optional[OpTable] = None,
                 source: str = '<script>') -> ProofScript:
    """Loads a proof script from text; see load_script."""
    return ScriptLoader(text, source, base_dir, overrides, config, optable).load()
