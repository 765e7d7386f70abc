"""Set-semantics interpreter for functional programs.

Every node maps input referent sets to an output referent set over the scene;
`visible` additionally consults render data.  Execution is pure and
deterministic; errors carry the offending node index.
"""

from dataclasses import dataclass

from .errors import (
    ArityViolationError,
    ExecutionError,
    NonUniqueReferentError,
    RankOutOfRangeError,
    RenderRequiredError,
)
from .programs import FILTER_FUNCTIONS, SAME_FUNCTIONS, attribute_kind, validate_program
from .raster import classify_object
from .scene import order_along, spatial_related


@dataclass(frozen=True)
class StepTrace:
    sets: tuple  # frozenset per node, indexed like program.nodes
    root: int

    @property
    def final(self):
        return self.sets[self.root]

    def __len__(self):
        return len(self.sets)


def _singleton(s, function):
    if len(s) != 1:
        raise ArityViolationError(
            f"{function} requires a singleton input set, got {len(s)} elements"
        )
    return next(iter(s))


def eval_node(node, input_sets, scene, render=None):
    f = node.function
    if f == "scene":
        return scene.ids()
    if f in FILTER_FUNCTIONS:
        kind = attribute_kind(f)
        value = node.value_inputs[0]
        (s,) = input_sets
        return frozenset(o for o in s if scene.object_by_id(o).attribute(kind) == value)
    if f == "unique":
        (s,) = input_sets
        if len(s) != 1:
            raise NonUniqueReferentError(f"unique over a set of {len(s)} objects")
        return s
    if f == "relate":
        (s,) = input_sets
        anchor = _singleton(s, "relate")
        return spatial_related(scene, anchor, node.value_inputs[0])
    if f in SAME_FUNCTIONS:
        kind = attribute_kind(f)
        (s,) = input_sets
        anchor = _singleton(s, f)
        value = scene.object_by_id(anchor).attribute(kind)
        return frozenset(
            o.id for o in scene.objects if o.id != anchor and o.attribute(kind) == value
        )
    if f == "and":
        a, b = input_sets
        return a & b
    if f == "or":
        a, b = input_sets
        return a | b
    if f == "ordinal":
        (s,) = input_sets
        rank = int(node.value_inputs[0])
        direction = node.value_inputs[1]
        ordered = order_along(scene, s, direction)
        if not 1 <= rank <= len(ordered):
            raise RankOutOfRangeError(f"ordinal rank {rank} over a set of {len(ordered)}")
        return frozenset({ordered[rank - 1]})
    if f == "visible":
        if render is None:
            raise RenderRequiredError("visible node executed without render data")
        (s,) = input_sets
        flag = node.value_inputs[0]
        return frozenset(o for o in s if classify_object(render, o) == flag)
    raise AssertionError(f"unhandled function {f!r}")  # validate_program guards this


def execute(program, scene, render=None):
    """Evaluate every node in topological order; returns the full StepTrace."""
    validate_program(program)
    sets = []
    for idx, node in enumerate(program.nodes):
        inputs = [sets[i] for i in node.inputs]
        try:
            sets.append(eval_node(node, inputs, scene, render))
        except Exception as e:
            raise ExecutionError(idx, e) from e
    return StepTrace(sets=tuple(sets), root=program.root)
