"""Factory expressions: tokenizer, recursive-descent parser, canonical printer and builders.

The grammar (docs/grammar.md) has two layers. Series expressions name a
coefficient series: catalog atoms and the compose/pc/convex combinators.
Factory expressions wrap a series expression in transforms: complement,
flip_input, scale, prod, chain and baseline. Canonical text is what
`str(node)` prints and what the library uses as names, so parsing the
canonical text of a node gives the node back.
"""

import re
from dataclasses import dataclass
from dataclasses import field
from fractions import Fraction
from typing import Optional
from typing import Union

from coinfactory.factory.sampler import Algorithm1Factory
from coinfactory.factory.sampler import Factory
from coinfactory.factory.sampler import WastlundFactory
from coinfactory.factory.transforms import transform_chain
from coinfactory.factory.transforms import transform_input_complement
from coinfactory.factory.transforms import transform_output_complement
from coinfactory.factory.transforms import transform_product
from coinfactory.factory.transforms import transform_scale
from coinfactory.harness.models.experiment import Algorithm
from coinfactory.nonrand.sampler import Algorithm2Factory
from coinfactory.series.catalog import CATALOG_NAMES
from coinfactory.series.catalog import catalog
from coinfactory.series.coefficients import CoefficientSeries
from coinfactory.series.coefficients import format_fraction
from coinfactory.series.combinators import compose
from coinfactory.series.combinators import convex_combination
from coinfactory.series.combinators import product_complement
from coinfactory.series.stopping import stopping_from_coefficients
from coinfactory.utils.errors import ExpressionSyntaxError


DEFAULT_ORDER = 32

SERIES_COMBINATORS = ("compose", "pc", "convex")
TRANSFORMS = ("complement", "flip_input", "scale", "prod", "chain", "baseline")

_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d+)?(?:[eE][-+]?\d+)?(?:/\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[(),=:\[\]]))",
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(text: str) -> list[Token]:
    """Split expression text into number, name and punctuation tokens."""
    tokens: list[Token] = []
    position = 0
    while position < len(text):
        if text[position:].strip() == "":
            break
        match = _TOKEN.match(text, position)
        if match is None:
            offset = position + len(text[position:]) - len(text[position:].lstrip())
            raise ExpressionSyntaxError(f"Unexpected character {text[offset]!r}", position=offset)
        kind = match.lastgroup
        tokens.append(Token(kind=kind, text=match.group(kind), position=match.start(kind)))
        position = match.end()
    tokens.append(Token(kind="end", text="", position=len(text)))
    return tokens


@dataclass(frozen=True)
class ExpressionNode:
    """One node of a parsed expression.

    Args:
        head (str): Catalog entry, combinator or transform name.
        children (tuple[ExpressionNode, ...]): Operands.
        params (tuple): (name, value) pairs; values are Fractions, ints or
            tuples of Fractions (finite coefficient lists).
        position (int): Offset of the head in the source text.
    """

    head: str
    children: tuple["ExpressionNode", ...] = ()
    params: tuple[tuple[str, Union[Fraction, int, tuple]], ...] = ()
    position: int = field(default=0, compare=False)

    @property
    def is_series(self) -> bool:
        return self.head in CATALOG_NAMES or self.head in SERIES_COMBINATORS

    def param(self, name: str):
        return dict(self.params)[name]

    def __str__(self) -> str:
        if self.head == "power":
            return f"power:a={format_fraction(self.param('a'))}"
        if self.head == "finite":
            return "finite:[" + ",".join(format_fraction(value) for value in self.param("values")) + "]"
        if not self.children:
            return self.head
        arguments = [str(child) for child in self.children]
        for name, value in self.params:
            arguments.append(f"{name}={format_fraction(value) if isinstance(value, Fraction) else value}")
        return f"{self.head}({','.join(arguments)})"


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        token = self.current
        if token.kind != kind or (text is not None and token.text != text):
            wanted = repr(text) if text is not None else kind
            found = repr(token.text) if token.kind != "end" else "end of input"
            raise ExpressionSyntaxError(f"Expected {wanted}, found {found}", position=token.position)
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.current.kind == "punct" and self.current.text == text:
            self.advance()
            return True
        return False

    def number(self) -> tuple[Fraction, int]:
        token = self.expect("number")
        try:
            return Fraction(token.text), token.position
        except (ValueError, ZeroDivisionError):
            raise ExpressionSyntaxError(f"Invalid number {token.text!r}", position=token.position) from None

    def keyword_number(self, name: str, required_keyword: bool) -> tuple[Fraction, int]:
        """`name=value`, or a bare value when the keyword is optional."""
        if self.current.kind == "name":
            keyword = self.advance()
            if keyword.text != name:
                raise ExpressionSyntaxError(f"Unknown parameter {keyword.text!r}", position=keyword.position)
            self.expect("punct", "=")
        elif required_keyword:
            raise ExpressionSyntaxError(f"Expected {name}=", position=self.current.position)
        return self.number()

    def parse(self) -> ExpressionNode:
        if self.current.kind == "end":
            raise ExpressionSyntaxError("Empty expression", position=0)
        node = self.factory()
        if self.current.kind != "end":
            raise ExpressionSyntaxError(f"Unexpected {self.current.text!r}", position=self.current.position)
        return node

    def factory(self) -> ExpressionNode:
        token = self.current
        if token.kind != "name":
            raise ExpressionSyntaxError("Expected a series or transform name", position=token.position)
        if token.text not in TRANSFORMS:
            return self.series()
        self.advance()
        self.expect("punct", "(")
        if token.text == "baseline":
            children = (self.series(),)
        else:
            children = (self.factory(),)
        params: tuple = ()
        if token.text in ("prod", "chain"):
            self.expect("punct", ",")
            children = children + (self.factory(),)
        elif token.text == "scale":
            self.expect("punct", ",")
            alpha, position = self.keyword_number("alpha", required_keyword=False)
            if not 0 < alpha <= 1:
                raise ExpressionSyntaxError(f"scale alpha must lie in (0, 1], got {alpha}", position=position)
            params = (("alpha", alpha),)
        self.expect("punct", ")")
        return ExpressionNode(head=token.text, children=children, params=params, position=token.position)

    def series(self) -> ExpressionNode:
        token = self.expect("name")
        if token.text in SERIES_COMBINATORS:
            return self.combinator(token)
        if token.text not in CATALOG_NAMES:
            raise ExpressionSyntaxError(f"Unknown name {token.text!r}", position=token.position)
        if token.text == "power":
            self.expect("punct", ":")
            a, position = self.keyword_number("a", required_keyword=True)
            if not 0 < a < 1:
                raise ExpressionSyntaxError(f"power exponent must lie in (0, 1), got {a}", position=position)
            return ExpressionNode(head="power", params=(("a", a),), position=token.position)
        if token.text == "finite":
            self.expect("punct", ":")
            self.expect("punct", "[")
            values = [self.number()[0]]
            while self.accept(","):
                values.append(self.number()[0])
            self.expect("punct", "]")
            try:
                catalog("finite", values)
            except ValueError as finite_exception:
                raise ExpressionSyntaxError(str(finite_exception), position=token.position) from None
            return ExpressionNode(head="finite", params=(("values", tuple(values)),), position=token.position)
        return ExpressionNode(head=token.text, position=token.position)

    def combinator(self, token: Token) -> ExpressionNode:
        self.expect("punct", "(")
        first = self.series()
        self.expect("punct", ",")
        second = self.series()
        params: tuple = ()
        if token.text == "compose":
            order = DEFAULT_ORDER
            if self.accept(","):
                value, position = self.keyword_number("order", required_keyword=False)
                if value.denominator != 1 or value < 1:
                    raise ExpressionSyntaxError(f"order must be a positive integer, got {value}", position=position)
                order = int(value)
            params = (("order", order),)
        elif token.text == "convex":
            self.expect("punct", ",")
            alpha, position = self.keyword_number("alpha", required_keyword=False)
            if not 0 < alpha < 1:
                raise ExpressionSyntaxError(f"convex alpha must lie in (0, 1), got {alpha}", position=position)
            params = (("alpha", alpha),)
        self.expect("punct", ")")
        return ExpressionNode(head=token.text, children=(first, second), params=params, position=token.position)


def parse_expression(text: str) -> ExpressionNode:
    """Parse a factory or series expression.

    Raises:
        ExpressionSyntaxError: Malformed text or a parameter out of range;
            `position` points at the offending character.
    """
    return _Parser(text).parse()


def canonical(text: str) -> str:
    """The canonical spelling of an expression."""
    return str(parse_expression(text))


def build_series(node: Union[str, ExpressionNode]) -> CoefficientSeries:
    """The coefficient series of a series expression."""
    if isinstance(node, str):
        node = parse_expression(node)
    if not node.is_series:
        raise ExpressionSyntaxError(f"{node.head} is a factory transform, not a series", position=node.position)
    if node.head == "power":
        return catalog("power", {"a": node.param("a")})
    if node.head == "finite":
        return catalog("finite", list(node.param("values")))
    if node.head == "compose":
        return compose(build_series(node.children[0]), build_series(node.children[1]), order=node.param("order"))
    if node.head == "pc":
        return product_complement(build_series(node.children[0]), build_series(node.children[1]))
    if node.head == "convex":
        return convex_combination(build_series(node.children[0]), build_series(node.children[1]), node.param("alpha"))
    return catalog(node.head)


def build_factory(
    node: Union[str, ExpressionNode],
    algorithm: Algorithm = Algorithm.RANDOMIZED,
    dyadic_shortcut: bool = False,
    digit_ceiling: Optional[int] = None,
    max_inputs: Optional[int] = None,
    trace: bool = False,
) -> Factory:
    """The factory of an expression.

    Series sub-expressions become samplers of the chosen algorithm; an
    explicit baseline(...) always uses the two-phase baseline.

    Args:
        node: Expression text or parsed node.
        algorithm (Algorithm): Sampler for series sub-expressions.
        dyadic_shortcut (bool): Constant-tail shortcut of the non-randomized sampler.
        digit_ceiling (int, optional): Precision ceiling for tracked series.
        max_inputs (int, optional): Cap on L for baseline samplers.
        trace (bool): Record (X_i, V_i) traces in randomized samplers.
    """
    if isinstance(node, str):
        node = parse_expression(node)
    options = dict(
        algorithm=algorithm,
        dyadic_shortcut=dyadic_shortcut,
        digit_ceiling=digit_ceiling,
        max_inputs=max_inputs,
        trace=trace,
    )

    if node.is_series:
        stopping = stopping_from_coefficients(build_series(node), precision_ceiling=digit_ceiling)
        if algorithm == Algorithm.NONRANDOMIZED:
            return Algorithm2Factory(stopping, dyadic_shortcut=dyadic_shortcut, precision_ceiling=digit_ceiling)
        if algorithm == Algorithm.BASELINE:
            return WastlundFactory(stopping, max_inputs=max_inputs)
        return Algorithm1Factory(stopping, trace=trace)

    if node.head == "baseline":
        stopping = stopping_from_coefficients(build_series(node.children[0]), precision_ceiling=digit_ceiling)
        return WastlundFactory(stopping, max_inputs=max_inputs)
    children = [build_factory(child, **options) for child in node.children]
    if node.head == "complement":
        return transform_output_complement(children[0])
    if node.head == "flip_input":
        return transform_input_complement(children[0])
    if node.head == "scale":
        return transform_scale(children[0], node.param("alpha"))
    if node.head == "prod":
        return transform_product(children[0], children[1])
    return transform_chain(children[0], children[1])
