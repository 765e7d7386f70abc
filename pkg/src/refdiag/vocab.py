"""Closed attribute vocabulary of the block world, plus surface synonyms.

Canonical values are what programs and scene files store; synonyms only ever
appear in realized expression text.
"""

COLORS = ("gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow")
SIZES = ("large", "small")
MATERIALS = ("metal", "rubber")
SHAPES = ("cube", "sphere", "cylinder")

# Canonical filter order, which is also the adjective order in text
# ("large red metal cube").
ATTRIBUTE_KINDS = ("size", "color", "material", "shape")

VALUES = {
    "size": SIZES,
    "color": COLORS,
    "material": MATERIALS,
    "shape": SHAPES,
}

# canonical value -> alternative surface forms
SYNONYMS = {
    "large": ("big",),
    "small": ("tiny",),
    "metal": ("metallic", "shiny"),
    "rubber": ("matte",),
    "cube": ("block",),
    "sphere": ("ball",),
}

# Nouns used when no shape filter applies.
GENERIC_NOUNS = ("thing", "object")

ORDINAL_WORDS = (
    "first", "second", "third", "fourth", "fifth",
    "sixth", "seventh", "eighth", "ninth", "tenth",
)

DIRECTIONS = ("left", "right", "front", "behind")

VISIBILITY_FULL = "fully_visible"
VISIBILITY_PARTIAL = "partially_visible"
VISIBILITY_AMBIGUOUS = "ambiguous"
VISIBILITY_FLAGS = (VISIBILITY_FULL, VISIBILITY_PARTIAL)

_CANONICAL = {}
for _kind, _vals in VALUES.items():
    for _v in _vals:
        _CANONICAL[_v] = _v
        for _syn in SYNONYMS.get(_v, ()):
            _CANONICAL[_syn] = _v


def canonical_value(word):
    """Map a surface word (synonym or canonical) to its canonical value."""
    try:
        return _CANONICAL[word]
    except KeyError:
        raise KeyError(f"unknown attribute word: {word!r}") from None


def surface_forms(value):
    """All accepted surface forms of a canonical value, canonical first."""
    return (value,) + SYNONYMS.get(value, ())


def kind_of(value):
    for kind, vals in VALUES.items():
        if value in vals:
            return kind
    raise KeyError(f"unknown attribute value: {value!r}")
