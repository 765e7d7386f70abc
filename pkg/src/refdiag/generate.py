"""Expression generation: survivor-count-uniform attribute sampling, program
construction from family skeletons, text realization, rejection sampling, and
false-premise generation.

Every expression is re-executed before being returned, so stored traces are
self-consistent by construction.
"""

import itertools
from dataclasses import dataclass, field

from .errors import ExecutionError, GenerationExhaustedError, TemplateError
from .families import find_step
from .programs import (
    FILTER_FUNCTIONS,
    ProgramNode,
    attribute_kind,
    make_program,
)
from .executor import execute
from .raster import classify_object
from .scene import order_along, scene_rng, spatial_related
from .vocab import (
    ATTRIBUTE_KINDS,
    DIRECTIONS,
    GENERIC_NOUNS,
    ORDINAL_WORDS,
    VALUES,
    VISIBILITY_AMBIGUOUS,
    VISIBILITY_FLAGS,
    VISIBILITY_FULL,
    surface_forms,
)

RELATION_PHRASES = {
    "left": ("to the left of", "on the left side of", "left of"),
    "right": ("to the right of", "on the right side of", "right of"),
    "front": ("in front of",),
    "behind": ("behind",),
}

DECOR_KINDS = ("ordinal", "visible")


@dataclass(frozen=True)
class GenerationSettings:
    # Decoration rates for eligible describe slots (anchor slots that need
    # uniqueness get an ordinal regardless).  Ordinal decorations force a
    # singleton referent, so their rate directly moves the single-object
    # fraction of the dataset; visible decorations do not.
    ordinal_decor_prob: float = 0.05
    visible_decor_prob: float = 0.30
    retry_cap: int = 200


class _Reject(Exception):
    """Internal: this sampling attempt cannot satisfy the constraints."""


def _choice(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _match_filters(scene, ids, filters):
    out = set(ids)
    for kind in ATTRIBUTE_KINDS:
        if kind in filters:
            out = {o for o in out if scene.object_by_id(o).attribute(kind) == filters[kind]}
    return frozenset(out)


def choose_attribute_combo(
    scene,
    candidate_set,
    allow_ordinal_visible,
    rng,
    *,
    render=None,
    allowed_decor=DECOR_KINDS,
    require_unique=False,
    ordinal_decor_prob=GenerationSettings.ordinal_decor_prob,
    visible_decor_prob=GenerationSettings.visible_decor_prob,
):
    """Pick attribute filters for a set, uniform over achievable survivor counts.

    All subsets of {size, color, material, shape} are instantiated with a
    randomly designated target object's values; a survivor count is sampled
    uniformly over the distinct achievable counts, then a subset achieving it
    uniformly.  Optionally decorates the description with an ordinal or a
    visibility predicate, never both.

    With require_unique, a non-singleton survivor set is forced into an
    ordinal decoration that picks the target (anchors must be unique).
    """
    candidates = sorted(candidate_set)
    if not candidates:
        raise _Reject("empty candidate set")
    target = scene.object_by_id(_choice(rng, candidates))

    by_count = {}
    for bits in range(16):
        subset = tuple(k for i, k in enumerate(ATTRIBUTE_KINDS) if bits & (1 << i))
        filters = {k: target.attribute(k) for k in subset}
        count = len(_match_filters(scene, candidates, filters))
        by_count.setdefault(count, []).append(filters)
    counts = sorted(by_count)
    chosen_count = _choice(rng, counts)
    filters = _choice(rng, by_count[chosen_count])
    survivors = _match_filters(scene, candidates, filters)

    decor = None
    if require_unique:
        if len(survivors) > 1:
            if not allow_ordinal_visible or "ordinal" not in allowed_decor:
                raise _Reject("anchor needs an ordinal but ordinal is unavailable")
            direction = _choice(rng, DIRECTIONS)
            rank = order_along(scene, survivors, direction).index(target.id) + 1
            decor = ("ordinal", rank, direction)
    elif allow_ordinal_visible and allowed_decor:
        # One uniform draw decides the decoration kind, so visible and
        # ordinal rates stay independent of each other's validity.
        visible_flags = ()
        if "visible" in allowed_decor and render is not None:
            classes = [classify_object(render, o) for o in survivors]
            if all(c != VISIBILITY_AMBIGUOUS for c in classes):
                visible_flags = tuple(f for f in VISIBILITY_FLAGS if f in classes)
        u = rng.uniform()
        if u < visible_decor_prob:
            if visible_flags:
                decor = ("visible", _choice(rng, visible_flags))
        elif u < visible_decor_prob + ordinal_decor_prob and "ordinal" in allowed_decor:
            direction = _choice(rng, DIRECTIONS)
            rank = int(rng.integers(1, len(survivors) + 1))
            decor = ("ordinal", rank, direction)
    return filters, decor


def _sabotage_filters(scene, candidate_set, rng):
    """Attribute combo that empties the candidate set while its first filter
    still survives — the false-premise construction."""
    candidates = frozenset(candidate_set)
    if not candidates:
        raise _Reject("empty candidate set")
    valid = []
    for n_kinds in range(1, len(ATTRIBUTE_KINDS) + 1):
        for subset in itertools.combinations(ATTRIBUTE_KINDS, n_kinds):
            for values in itertools.product(*(VALUES[k] for k in subset)):
                filters = dict(zip(subset, values))
                if _match_filters(scene, candidates, filters):
                    continue
                first_kind = next(k for k in ATTRIBUTE_KINDS if k in filters)
                if _match_filters(scene, candidates, {first_kind: filters[first_kind]}):
                    valid.append(filters)
    if not valid:
        raise _Reject("no false-premise attribute combo exists for this set")
    return _choice(rng, valid)


@dataclass
class _Build:
    nodes: list = field(default_factory=list)
    sets: list = field(default_factory=list)

    def add(self, node, result):
        self.nodes.append(node)
        self.sets.append(frozenset(result))
        return len(self.nodes) - 1


def _expand_family(family, scene, render, rng, settings, sabotage_final=False):
    """Instantiate a family skeleton on a scene; raises _Reject when the drawn
    parameters cannot yield a valid expression."""
    build = _Build()
    build.add(ProgramNode("scene"), scene.ids())
    step_out = {}
    used_decor = set()

    for step in family.steps:
        if step.op == "describe":
            src = 0 if step.source is None else step_out[step.source]
            candidate = build.sets[src]
            is_final = step is family.steps[-1]
            if sabotage_final and is_final:
                if not candidate:
                    raise _Reject("candidate set already empty before sabotage")
                filters, decor = _sabotage_filters(scene, candidate, rng), None
            else:
                if not candidate:
                    raise _Reject(f"step {step.name}: empty candidate set")
                allowed = tuple(
                    k for k in DECOR_KINDS
                    if not (used_decor and k not in used_decor)
                )
                filters, decor = choose_attribute_combo(
                    scene,
                    candidate,
                    allow_ordinal_visible=step.decor or step.unique,
                    rng=rng,
                    render=render,
                    allowed_decor=allowed if step.decor or step.unique else (),
                    require_unique=step.unique,
                    ordinal_decor_prob=settings.ordinal_decor_prob,
                    visible_decor_prob=settings.visible_decor_prob,
                )
            tail, current = src, candidate
            for kind in ATTRIBUTE_KINDS:
                if kind in filters:
                    current = _match_filters(scene, current, {kind: filters[kind]})
                    tail = build.add(
                        ProgramNode(f"filter_{kind}", (filters[kind],), (tail,)), current
                    )
            if decor is not None:
                used_decor.add(decor[0])
                if decor[0] == "ordinal":
                    _, rank, direction = decor
                    ordered = order_along(scene, current, direction)
                    if not 1 <= rank <= len(ordered):
                        raise _Reject("ordinal rank out of range")
                    current = frozenset({ordered[rank - 1]})
                    node = ProgramNode("ordinal", (str(rank), direction), (tail,))
                else:
                    flag = decor[1]
                    current = frozenset(
                        o for o in current if classify_object(render, o) == flag
                    )
                    node = ProgramNode("visible", (flag,), (tail,))
                tail = build.add(node, current)
            if step.unique:
                if len(current) != 1:
                    raise _Reject(f"step {step.name}: anchor not unique")
                tail = build.add(ProgramNode("unique", (), (tail,)), current)
            step_out[step.name] = tail
        elif step.op == "relate":
            direction = _choice(rng, DIRECTIONS)
            anchor_idx = step_out[step.anchor]
            (anchor,) = build.sets[anchor_idx]
            result = spatial_related(scene, anchor, direction)
            step_out[step.name] = build.add(
                ProgramNode("relate", (direction,), (anchor_idx,)), result
            )
        elif step.op == "same":
            kind = _choice(rng, ATTRIBUTE_KINDS)
            anchor_idx = step_out[step.anchor]
            (anchor,) = build.sets[anchor_idx]
            value = scene.object_by_id(anchor).attribute(kind)
            result = frozenset(
                o.id
                for o in scene.objects
                if o.id != anchor and o.attribute(kind) == value
            )
            step_out[step.name] = build.add(
                ProgramNode(f"same_{kind}", (), (anchor_idx,)), result
            )
        elif step.op == "logic":
            left, right = step_out[step.left], step_out[step.right]
            a, b = build.sets[left], build.sets[right]
            result = (a & b) if step.kind == "and" else (a | b)
            step_out[step.name] = build.add(
                ProgramNode(step.kind, (), (left, right)), result
            )
    return make_program(build.nodes)


# --- text realization -------------------------------------------------------

@dataclass(frozen=True)
class _DescribeBinding:
    filters: dict
    decor: tuple
    unique: bool


def _bind_program(program, family):
    """Match program nodes against the family skeleton; TemplateError on any
    mismatch.  Returns {step name -> binding or direction or attr kind}.

    Matching walks the steps in reverse, peeling each step's node chain off
    the dataflow graph starting from the root.  (Forward greedy matching is
    ambiguous when two describe steps share the scene source and one of them
    has no filters.)
    """
    nodes = program.nodes
    if not nodes or nodes[0].function != "scene":
        raise TemplateError("program does not start with a scene node")
    out_index = {family.steps[-1].name: program.root}
    bindings = {}
    claimed = set()

    def claim(idx, what):
        if idx == 0 or idx in claimed:
            raise TemplateError(f"{what}: node {idx} already claimed or is the scene node")
        claimed.add(idx)

    for step in reversed(family.steps):
        if step.name not in out_index:
            raise TemplateError(f"step {step.name}: output position never established")
        i = out_index[step.name]
        if step.op == "describe":
            if step.unique:
                if nodes[i].function != "unique":
                    raise TemplateError(f"step {step.name}: expected a unique node")
                claim(i, step.name)
                i = nodes[i].inputs[0]
            decor = None
            if nodes[i].function in ("ordinal", "visible"):
                if not (step.decor or step.unique):
                    raise TemplateError(
                        f"step {step.name} may not carry a {nodes[i].function} decoration"
                    )
                n = nodes[i]
                if n.function == "ordinal":
                    decor = ("ordinal", int(n.value_inputs[0]), n.value_inputs[1])
                else:
                    decor = ("visible", n.value_inputs[0])
                claim(i, step.name)
                i = n.inputs[0]
            filters = {}
            while nodes[i].function in FILTER_FUNCTIONS:
                kind = attribute_kind(nodes[i].function)
                if kind in filters:
                    raise TemplateError(f"step {step.name}: duplicate {kind} filter")
                filters[kind] = nodes[i].value_inputs[0]
                claim(i, step.name)
                i = nodes[i].inputs[0]
            bindings[step.name] = _DescribeBinding(filters, decor, step.unique)
            if step.source is None:
                if i != 0:
                    raise TemplateError(f"step {step.name}: does not start from the scene")
            else:
                out_index[step.source] = i
        elif step.op == "relate":
            if nodes[i].function != "relate":
                raise TemplateError(f"step {step.name}: expected a relate node")
            claim(i, step.name)
            bindings[step.name] = nodes[i].value_inputs[0]
            out_index[step.anchor] = nodes[i].inputs[0]
        elif step.op == "same":
            if nodes[i].function not in ("same_size", "same_color", "same_material", "same_shape"):
                raise TemplateError(f"step {step.name}: expected a same_* node")
            claim(i, step.name)
            bindings[step.name] = attribute_kind(nodes[i].function)
            out_index[step.anchor] = nodes[i].inputs[0]
        elif step.op == "logic":
            if nodes[i].function != step.kind:
                raise TemplateError(f"step {step.name}: expected an {step.kind} node")
            claim(i, step.name)
            out_index[step.left] = nodes[i].inputs[0]
            out_index[step.right] = nodes[i].inputs[1]
    if len(claimed) != len(nodes) - 1:
        raise TemplateError("program has nodes beyond the family skeleton")
    return bindings


def _noun_form(noun, mode):
    if mode == "singular":
        return noun
    if mode == "words":
        return noun + "s"
    return noun + "(s)"  # paren


def _describe_phrase(binding, style, rng):
    filters = binding.filters
    adjectives = [
        _choice(rng, surface_forms(filters[kind]))
        for kind in ("size", "color", "material")
        if kind in filters
    ]
    if "shape" in filters:
        noun = _choice(rng, surface_forms(filters["shape"]))
    else:
        noun = _choice(rng, GENERIC_NOUNS)

    def core(mode):
        return " ".join(adjectives + [_noun_form(noun, mode)])

    if binding.decor is not None and binding.decor[0] == "ordinal":
        _, rank, direction = binding.decor
        if rank > len(ORDINAL_WORDS):
            raise TemplateError(f"no ordinal wording for rank {rank}")
        return f"{ORDINAL_WORDS[rank - 1]} one of the {core('paren')} from {direction}"
    if binding.decor is not None and binding.decor[0] == "visible":
        words = "fully visible" if binding.decor[1] == VISIBILITY_FULL else "partially visible"
        inner = core("singular" if binding.unique else "paren")
        return f"{words} {inner}"
    return core("singular" if binding.unique else style)


def realize_text(program, template, rng):
    """Render a program through one of its family's text templates.

    Surface synonym choices are drawn from rng in skeleton-step order, so the
    same (program, template, rng state) always yields the same string.
    """
    family = template.family
    bindings = _bind_program(program, family)
    mapping = {}
    for step in family.steps:
        b = bindings.get(step.name)
        if step.op == "describe":
            mapping[step.name] = _describe_phrase(b, template.plural, rng)
        elif step.op == "relate":
            mapping[f"rel_{step.name}"] = _choice(rng, RELATION_PHRASES[b])
        elif step.op == "same":
            mapping[f"attr_{step.name}"] = b
    return template.pattern.format(**mapping)


# --- expression sampling ----------------------------------------------------

@dataclass(frozen=True)
class RefExpression:
    text: str
    program: object
    category: str
    referred_ids: frozenset
    step_sets: tuple  # frozenset per program node
    scene_id: int
    is_single_object: bool
    is_false_premise: bool


def _finish(program, trace, text, category, scene_id, false_premise):
    return RefExpression(
        text=text,
        program=program,
        category=category,
        referred_ids=trace.final,
        step_sets=trace.sets,
        scene_id=scene_id,
        is_single_object=len(trace.final) == 1,
        is_false_premise=false_premise,
    )


def sample_expression(scene, render, catalog, rng, settings=None, scene_id=None):
    """Sample one valid referring expression for a scene (rejection sampling).

    Raises GenerationExhaustedError when the retry cap is hit.
    """
    settings = settings or GenerationSettings()
    scene_id = scene.seed if scene_id is None else scene_id
    for _attempt in range(settings.retry_cap):
        family = catalog.sample_family(rng)
        template = _choice(rng, family.texts)
        try:
            program = _expand_family(family, scene, render, rng, settings)
            trace = execute(program, scene, render)
        except (_Reject, ExecutionError):
            continue
        if not trace.final:
            continue
        text = realize_text(program, template, rng)
        return _finish(program, trace, text, family.category, scene_id, False)
    raise GenerationExhaustedError(
        f"no valid expression for scene {scene_id} after {settings.retry_cap} attempts"
    )


def generate_false_premise(scene, render, catalog, rng, settings=None, scene_id=None):
    """Sample an expression whose final referent set is empty while every
    step before the sabotaged description is non-empty."""
    settings = settings or GenerationSettings()
    scene_id = scene.seed if scene_id is None else scene_id
    for _attempt in range(settings.retry_cap):
        family = catalog.sample_family(rng)
        template = _choice(rng, family.texts)
        try:
            program = _expand_family(
                family, scene, render, rng, settings, sabotage_final=True
            )
            trace = execute(program, scene, render)
        except (_Reject, ExecutionError):
            continue
        if trace.final:
            continue
        if len(trace.sets) < 2 or not trace.sets[1]:
            continue
        text = realize_text(program, template, rng)
        return _finish(program, trace, text, family.category, scene_id, True)
    raise GenerationExhaustedError(
        f"no false-premise expression for scene {scene_id} after {settings.retry_cap} attempts"
    )


# --- dataset assembly -------------------------------------------------------

@dataclass(frozen=True)
class DatasetManifest:
    scenes: tuple
    expressions: tuple
    category_counts: dict
    seed: int
    n_per_image: int

    def validate_counts(self):
        total = sum(self.category_counts.values())
        if total != len(self.expressions):
            raise ValueError("category counts do not sum to the expression count")


def _recount(expressions):
    counts = {}
    for e in expressions:
        counts[e.category] = counts.get(e.category, 0) + 1
    return counts


def generate_dataset(
    scenes, n_per_image, catalog, seed, renders=None, settings=None, false_premise=0
):
    """Generate n_per_image expressions per scene (plus optional false-premise
    rows spread round-robin over scenes); deterministic per seed.

    Each expression draws from its own seed stream, so output is independent
    of any parallel execution order.
    """
    from .raster import rasterize  # local import keeps module load light

    settings = settings or GenerationSettings()
    if n_per_image < 1:
        raise ValueError("n_per_image must be >= 1")
    scenes = tuple(scenes)
    if renders is None:
        renders = [rasterize(s) for s in scenes]
    expressions = []
    for k, (scene, render) in enumerate(zip(scenes, renders)):
        for j in range(n_per_image):
            rng = scene_rng(seed, 1, k, j)
            expressions.append(
                sample_expression(scene, render, catalog, rng, settings, scene_id=k)
            )
    for j in range(false_premise):
        k = j % len(scenes)
        rng = scene_rng(seed, 2, j)
        expressions.append(
            generate_false_premise(
                scenes[k], renders[k], catalog, rng, settings, scene_id=k
            )
        )
    for e in expressions:  # emit-time self-consistency check
        trace = execute(e.program, scenes[e.scene_id], renders[e.scene_id])
        if trace.sets != tuple(e.step_sets) or trace.final != e.referred_ids:
            raise AssertionError("stored trace does not re-execute (generator bug)")
    return DatasetManifest(
        scenes=scenes,
        expressions=tuple(expressions),
        category_counts=_recount(expressions),
        seed=seed,
        n_per_image=n_per_image,
    )
