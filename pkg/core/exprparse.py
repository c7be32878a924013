"""
Парсер и вычислитель скалярных выражений для пользовательских энергий.

Грамматика (EBNF в docs/GRAMMAR.md) собрана на pyparsing через infix_notation:
    ^ (правоассоциативная) > унарный минус > * / > + -
Функции: sqrt, abs, exp, log (один аргумент), min, max (два и более).
Переменные: gamma, I, t, l1, l2. Вычисление векторизовано через numpy,
выход за область определения превращается в ExprDomainError с подвыражением.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
import pyparsing as pp

logger = logging.getLogger(__name__)

pp.ParserElement.enable_packrat()

ALL_VARIABLES = frozenset({"gamma", "I", "t", "l1", "l2"})

# имя -> (минимальная арность, максимальная арность или None)
FUNCTIONS: dict[str, tuple[int, int | None]] = {
    "sqrt": (1, 1),
    "abs": (1, 1),
    "exp": (1, 1),
    "log": (1, 1),
    "min": (2, None),
    "max": (2, None),
}


class ExprError(ValueError):
    """
    Базовая ошибка выражения.

    Attributes:
        position (int | None): Смещение в исходном тексте (с нуля).
        line (int | None): Номер строки (с единицы).
        column (int | None): Номер столбца (с единицы).
    """

    def __init__(self, message: str, source: str | None = None, position: int | None = None):
        self.source = source
        self.position = position
        self.line = None
        self.column = None
        if source is not None and position is not None:
            self.line = pp.lineno(position, source)
            self.column = pp.col(position, source)
            message = f"{message} (строка {self.line}, столбец {self.column})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    """Текст не соответствует грамматике."""


class UnknownNameError(ExprError):
    """Неизвестная переменная или функция, либо неверная арность."""


class UnboundVariableError(ExprError):
    """Переменной выражения не передано значение."""


class ExprDomainError(ExprError):
    """
    Подвыражение вне области определения: деление на ноль, корень или логарифм
    от недопустимого аргумента, нечисловой результат.

    Attributes:
        subexpression (str): Текст подвыражения.
        bindings (dict[str, float]): Значения переменных в первой проблемной точке.
    """

    def __init__(self, message: str, subexpression: str, bindings: dict[str, float]):
        self.subexpression = subexpression
        self.bindings = bindings
        super().__init__(f"{message}: {subexpression} при {bindings}")


# --- Узлы AST ---

@dataclass(frozen=True)
class Num:
    value: float
    position: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    position: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    position: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    position: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]
    position: int = field(default=-1, compare=False)


Expr = Num | Var | Unary | Binary | Call


# --- Грамматика ---

def _number_action(s, loc, toks):
    value = float(toks[0])
    if not np.isfinite(value):
        raise pp.ParseFatalException(s, loc, f"литерал {toks[0]} не помещается в float")
    return Num(value, position=loc)


def _variable_action(s, loc, toks):
    return Var(toks[0], position=loc)


def _call_action(s, loc, toks):
    return Call(toks[0], tuple(toks[1]), position=loc)


def _unary_action(s, loc, toks):
    items = list(toks[0])
    node = items[-1]
    for op in reversed(items[:-1]):
        node = Unary(op, node, position=loc)
    return node


def _left_binary_action(s, loc, toks):
    items = list(toks[0])
    node = items[0]
    for i in range(1, len(items), 2):
        node = Binary(items[i], node, items[i + 1], position=loc)
    return node


def _right_binary_action(s, loc, toks):
    items = list(toks[0])
    node = items[-1]
    for i in range(len(items) - 2, 0, -2):
        node = Binary(items[i], items[i - 1], node, position=loc)
    return node


def _build_grammar() -> pp.ParserElement:
    expr = pp.Forward()
    identifier = pp.Regex(r"[A-Za-z_][A-Za-z0-9_]*")
    number = pp.Regex(r"(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?").set_parse_action(_number_action)
    call = (
        identifier
        + pp.Suppress("(")
        + pp.Group(pp.Optional(pp.DelimitedList(expr)))
        + pp.Suppress(")")
    ).set_parse_action(_call_action)
    variable = identifier.copy().set_parse_action(_variable_action)
    operand = number | call | variable

    expr <<= pp.infix_notation(
        operand,
        [
            (pp.Literal("^"), 2, pp.OpAssoc.RIGHT, _right_binary_action),
            (pp.Literal("-"), 1, pp.OpAssoc.RIGHT, _unary_action),
            (pp.one_of("* /"), 2, pp.OpAssoc.LEFT, _left_binary_action),
            (pp.one_of("+ -"), 2, pp.OpAssoc.LEFT, _left_binary_action),
        ],
    )
    return expr


_GRAMMAR = _build_grammar()


def _walk(node: Expr):
    yield node
    if isinstance(node, Unary):
        yield from _walk(node.operand)
    elif isinstance(node, Binary):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, Call):
        for arg in node.args:
            yield from _walk(arg)


def free_variables(expr: Expr) -> frozenset[str]:
    return frozenset(node.name for node in _walk(expr) if isinstance(node, Var))


def parse(source: str, variables: Iterable[str] = ALL_VARIABLES) -> Expr:
    """
    Разбирает текст выражения в AST.

    Args:
        source: Текст выражения
        variables: Разрешенные имена переменных

    Returns:
        Корень AST

    Raises:
        ExprSyntaxError: Текст не соответствует грамматике
        UnknownNameError: Неизвестное имя или неверная арность функции
    """
    allowed = frozenset(variables)
    if not source or not source.strip():
        raise ExprSyntaxError("Пустое выражение", source, 0)
    try:
        result = _GRAMMAR.parse_string(source, parse_all=True)
    except pp.ParseBaseException as e:
        raise ExprSyntaxError(f"Синтаксическая ошибка: {e.msg}", source, e.loc) from e

    tree = result[0]
    for node in _walk(tree):
        if isinstance(node, Var) and node.name not in allowed:
            raise UnknownNameError(
                f"Неизвестная переменная '{node.name}', допустимы: {', '.join(sorted(allowed))}",
                source, node.position,
            )
        if isinstance(node, Call):
            if node.func not in FUNCTIONS:
                raise UnknownNameError(f"Неизвестная функция '{node.func}'", source, node.position)
            low, high = FUNCTIONS[node.func]
            count = len(node.args)
            if count < low or (high is not None and count > high):
                raise UnknownNameError(
                    f"Функция '{node.func}' получила {count} аргумент(ов)", source, node.position
                )
    return tree


# --- Печать ---

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_UNARY_PRECEDENCE = 3
_ATOM_PRECEDENCE = 5


def _precedence(node: Expr) -> int:
    if isinstance(node, Binary):
        return _PRECEDENCE[node.op]
    if isinstance(node, Unary):
        return _UNARY_PRECEDENCE
    if isinstance(node, Num) and node.value < 0:
        return _UNARY_PRECEDENCE
    return _ATOM_PRECEDENCE


def _wrap(node: Expr, needs_parens: bool) -> str:
    text = to_source(node)
    return f"({text})" if needs_parens else text


def to_source(expr: Expr) -> str:
    """
    Печатает AST с минимальной расстановкой скобок; parse(to_source(e)) == e.
    """
    if isinstance(expr, Num):
        if not np.isfinite(expr.value):
            raise ValueError(f"Нечисловой литерал {expr.value!r} не имеет записи в грамматике")
        if expr.value < 0:
            return f"-{repr(-expr.value)}"
        return repr(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Call):
        return f"{expr.func}({', '.join(to_source(arg) for arg in expr.args)})"
    if isinstance(expr, Unary):
        return f"-{_wrap(expr.operand, _precedence(expr.operand) < _UNARY_PRECEDENCE)}"

    p = _PRECEDENCE[expr.op]
    if expr.op == "^":
        left = _wrap(expr.left, _precedence(expr.left) <= p)
        right = _wrap(expr.right, _precedence(expr.right) < p)
        return f"{left}^{right}"
    left = _wrap(expr.left, _precedence(expr.left) < p)
    right = _wrap(expr.right, _precedence(expr.right) <= p)
    return f"{left} {expr.op} {right}"


# --- Вычисление ---

class _Evaluator:
    def __init__(self, bindings: Mapping[str, object]):
        self.bindings = {name: np.asarray(value, dtype=float) for name, value in bindings.items()}
        self.shape = np.broadcast_shapes(*(v.shape for v in self.bindings.values())) if self.bindings else ()

    def fail(self, node: Expr, mask, reason: str):
        mask = np.broadcast_to(np.asarray(mask), self.shape)
        index = tuple(np.argwhere(mask)[0]) if mask.ndim else ()
        point = {
            name: float(np.broadcast_to(value, self.shape)[index])
            for name, value in self.bindings.items()
        }
        raise ExprDomainError(reason, to_source(node), point)

    def check_finite(self, node: Expr, value):
        bad = ~np.isfinite(value)
        if np.any(bad):
            self.fail(node, bad, "Нечисловой результат")
        return value

    def run(self, node: Expr):
        if isinstance(node, Num):
            return np.float64(node.value)
        if isinstance(node, Var):
            if node.name not in self.bindings:
                raise UnboundVariableError(f"Переменной '{node.name}' не передано значение")
            return self.bindings[node.name]
        if isinstance(node, Unary):
            return -self.run(node.operand)
        if isinstance(node, Call):
            return self.call(node)
        return self.binary(node)

    def call(self, node: Call):
        args = [self.run(arg) for arg in node.args]
        with np.errstate(all="ignore"):
            if node.func == "sqrt":
                if np.any(args[0] < 0):
                    self.fail(node, args[0] < 0, "Корень из отрицательного числа")
                value = np.sqrt(args[0])
            elif node.func == "log":
                if np.any(args[0] <= 0):
                    self.fail(node, args[0] <= 0, "Логарифм неположительного числа")
                value = np.log(args[0])
            elif node.func == "abs":
                value = np.abs(args[0])
            elif node.func == "exp":
                value = np.exp(args[0])
            elif node.func == "min":
                value = np.minimum.reduce(np.broadcast_arrays(*args))
            else:
                value = np.maximum.reduce(np.broadcast_arrays(*args))
        return self.check_finite(node, value)

    def binary(self, node: Binary):
        left = self.run(node.left)
        right = self.run(node.right)
        with np.errstate(all="ignore"):
            if node.op == "+":
                value = left + right
            elif node.op == "-":
                value = left - right
            elif node.op == "*":
                value = left * right
            elif node.op == "/":
                if np.any(right == 0):
                    self.fail(node, right == 0, "Деление на ноль")
                value = left / right
            else:
                negative_base = (left < 0) & (np.asarray(right) != np.round(right))
                if np.any(negative_base):
                    self.fail(node, negative_base, "Дробная степень отрицательного числа")
                zero_base = (left == 0) & (np.asarray(right) < 0)
                if np.any(zero_base):
                    self.fail(node, zero_base, "Деление на ноль")
                value = np.power(left, right)
        return self.check_finite(node, value)


def evaluate(expr: Expr, bindings: Mapping[str, object]):
    """
    Вычисляет выражение в семантике IEEE double.

    Args:
        expr: Корень AST
        bindings: Значения переменных, скаляры или массивы одинаковой формы

    Returns:
        float для скалярных аргументов, иначе np.ndarray формы аргументов

    Raises:
        UnboundVariableError: Переменная без значения
        ExprDomainError: Выход за область определения
    """
    evaluator = _Evaluator(bindings)
    value = np.asarray(evaluator.run(expr), dtype=float)
    if evaluator.shape == ():
        return float(value)
    return np.array(np.broadcast_to(value, evaluator.shape))


def to_callable(expr: Expr, variables: tuple[str, ...]) -> Callable:
    """Функция позиционных аргументов в порядке variables."""
    def compiled(*values):
        return evaluate(expr, dict(zip(variables, values)))
    compiled.__name__ = f"expr_{'_'.join(variables)}"
    return compiled
