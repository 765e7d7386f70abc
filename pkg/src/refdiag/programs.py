"""Functional-program representation: node catalog, validation, (de)serialization.

A program is a topologically ordered DAG of typed module nodes with a single
root.  The document format is a list of {function, value_inputs, inputs}
objects; node order in the list is the node index space.
"""

from dataclasses import dataclass

from .errors import (
    CyclicProgramError,
    DanglingInputError,
    MultipleRootsError,
    ProgramArityError,
    UnknownFunctionError,
)
from .vocab import DIRECTIONS, VALUES, VISIBILITY_FLAGS

FILTER_FUNCTIONS = ("filter_size", "filter_color", "filter_material", "filter_shape")
SAME_FUNCTIONS = ("same_size", "same_color", "same_material", "same_shape")
LOGIC_FUNCTIONS = ("and", "or")

# function -> number of node inputs
INPUT_ARITY = {"scene": 0, "and": 2, "or": 2}
for _f in FILTER_FUNCTIONS + SAME_FUNCTIONS + ("unique", "relate", "ordinal", "visible"):
    INPUT_ARITY[_f] = 1

# function -> number of value inputs
VALUE_ARITY = {name: 0 for name in INPUT_ARITY}
for _f in FILTER_FUNCTIONS:
    VALUE_ARITY[_f] = 1
VALUE_ARITY["relate"] = 1
VALUE_ARITY["ordinal"] = 2  # (rank, direction)
VALUE_ARITY["visible"] = 1

FUNCTIONS = tuple(sorted(INPUT_ARITY))


def attribute_kind(function):
    """'filter_color' / 'same_color' -> 'color'."""
    return function.split("_", 1)[1]


@dataclass(frozen=True)
class ProgramNode:
    function: str
    value_inputs: tuple = ()
    inputs: tuple = ()


@dataclass(frozen=True)
class Program:
    nodes: tuple
    root: int

    @property
    def topology(self):
        """'tree' when a logical merge is present, else 'chain'."""
        for node in self.nodes:
            if node.function in LOGIC_FUNCTIONS:
                return "tree"
        return "chain"

    @property
    def relate_count(self):
        return sum(1 for n in self.nodes if n.function == "relate")

    def module_kinds(self):
        return frozenset(n.function for n in self.nodes)


def _check_value_inputs(idx, node):
    vals = node.value_inputs
    if len(vals) != VALUE_ARITY[node.function]:
        raise ProgramArityError(
            f"node {idx} ({node.function}): expected {VALUE_ARITY[node.function]} "
            f"value inputs, got {len(vals)}"
        )
    if node.function in FILTER_FUNCTIONS:
        kind = attribute_kind(node.function)
        if vals[0] not in VALUES[kind]:
            raise ProgramArityError(
                f"node {idx} ({node.function}): unknown {kind} value {vals[0]!r}"
            )
    elif node.function == "relate":
        if vals[0] not in DIRECTIONS:
            raise ProgramArityError(f"node {idx} (relate): unknown direction {vals[0]!r}")
    elif node.function == "ordinal":
        rank, direction = vals
        if not str(rank).isdigit() or int(rank) < 1:
            raise ProgramArityError(f"node {idx} (ordinal): bad rank {rank!r}")
        if direction not in DIRECTIONS:
            raise ProgramArityError(f"node {idx} (ordinal): unknown direction {direction!r}")
    elif node.function == "visible":
        if vals[0] not in VISIBILITY_FLAGS:
            raise ProgramArityError(f"node {idx} (visible): unknown flag {vals[0]!r}")


def validate_program(program):
    nodes = program.nodes
    if not nodes:
        raise ProgramArityError("empty program")
    consumed = set()
    for idx, node in enumerate(nodes):
        if node.function not in INPUT_ARITY:
            raise UnknownFunctionError(f"node {idx}: unknown function {node.function!r}")
        if len(node.inputs) != INPUT_ARITY[node.function]:
            raise ProgramArityError(
                f"node {idx} ({node.function}): expected {INPUT_ARITY[node.function]} "
                f"inputs, got {len(node.inputs)}"
            )
        for ref in node.inputs:
            if not 0 <= ref < len(nodes):
                raise DanglingInputError(f"node {idx}: input {ref} does not exist")
            if ref >= idx:
                raise CyclicProgramError(
                    f"node {idx}: input {ref} is not earlier in the list "
                    "(self-reference or forward reference)"
                )
            consumed.add(ref)
        _check_value_inputs(idx, node)
    roots = [i for i in range(len(nodes)) if i not in consumed]
    if len(roots) != 1:
        raise MultipleRootsError(f"expected exactly one root node, found {roots}")
    if program.root != roots[0]:
        raise MultipleRootsError(
            f"declared root {program.root} does not match the unconsumed node {roots[0]}"
        )
    return program


def make_program(nodes):
    """Build and validate a Program whose root is the sole unconsumed node."""
    nodes = tuple(nodes)
    consumed = {ref for node in nodes for ref in node.inputs}
    roots = [i for i in range(len(nodes)) if i not in consumed]
    root = roots[0] if len(roots) == 1 else len(nodes) - 1
    return validate_program(Program(nodes=nodes, root=root))


def parse_program(document):
    """Parse a program document (list of node dicts) with full validation."""
    if isinstance(document, dict):
        document = document["nodes"]
    nodes = []
    for entry in document:
        nodes.append(
            ProgramNode(
                function=entry["function"],
                value_inputs=tuple(str(v) for v in entry.get("value_inputs", [])),
                inputs=tuple(int(i) for i in entry.get("inputs", [])),
            )
        )
    return make_program(nodes)


def emit_program(program):
    return [
        {
            "function": n.function,
            "value_inputs": list(n.value_inputs),
            "inputs": list(n.inputs),
        }
        for n in program.nodes
    ]
