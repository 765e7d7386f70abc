"""Expression family catalog: program skeletons plus text templates.

Families ship as JSON data (one file per family) so template coverage is
auditable.  A family's skeleton is a list of steps:

  {"op": "describe", "name": n, "source": step|null, "unique": bool, "decor": bool}
  {"op": "relate",   "name": n, "anchor": describe-step}
  {"op": "same",     "name": n, "anchor": describe-step}
  {"op": "logic",    "name": n, "kind": "and"|"or", "left": step, "right": step}

`source: null` means the shared scene node.  Text templates reference
describe steps as {name}, relate directions as {rel_name}, and the sampled
same-attribute as {attr_name}.
"""

import json
import re
import statistics
from dataclasses import dataclass, field
from importlib import resources

from .errors import ConfigError, TemplateError

CATEGORIES = (
    "zero_relate",
    "one_relate",
    "two_relate",
    "three_relate",
    "and_logic",
    "or_logic",
    "same_relate",
)

PLURAL_STYLES = ("words", "paren")

# How often the probability of small categories is boosted when sampling:
# categories with fewer families than the median get their weight doubled.
SMALL_CATEGORY_BOOST = 2.0


@dataclass(frozen=True)
class Step:
    op: str
    name: str
    source: str = None          # describe: None means the scene node
    anchor: str = None          # relate / same
    unique: bool = False        # describe
    decor: bool = False         # describe: may carry ordinal/visible
    kind: str = None            # logic: "and" | "or"
    left: str = None
    right: str = None


@dataclass(frozen=True)
class TextTemplate:
    pattern: str
    plural: str
    family: "TemplateFamily" = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class TemplateFamily:
    name: str
    category: str
    steps: tuple
    texts: tuple

    @property
    def output_step(self):
        return self.steps[-1]


def _placeholders(pattern):
    return set(re.findall(r"\{([a-z0-9_]+)\}", pattern))


def _validate_family(fam):
    if fam.category not in CATEGORIES:
        raise ConfigError(f"family {fam.name}: unknown category {fam.category!r}")
    names = set()
    relates = 0
    logic_kind = None
    has_same = False
    slots = set()
    for step in fam.steps:
        if step.name in names:
            raise ConfigError(f"family {fam.name}: duplicate step {step.name!r}")
        if step.op == "describe":
            if step.source is not None and step.source not in names:
                raise ConfigError(f"family {fam.name}: step {step.name} bad source")
            slots.add(step.name)
        elif step.op == "relate":
            anchor = next((s for s in fam.steps if s.name == step.anchor), None)
            if anchor is None or anchor.op != "describe" or not anchor.unique:
                raise ConfigError(
                    f"family {fam.name}: relate {step.name} needs a unique describe anchor"
                )
            relates += 1
            slots.add(f"rel_{step.name}")
        elif step.op == "same":
            anchor = next((s for s in fam.steps if s.name == step.anchor), None)
            if anchor is None or anchor.op != "describe" or not anchor.unique:
                raise ConfigError(
                    f"family {fam.name}: same {step.name} needs a unique describe anchor"
                )
            has_same = True
            slots.add(f"attr_{step.name}")
        elif step.op == "logic":
            if step.kind not in ("and", "or"):
                raise ConfigError(f"family {fam.name}: bad logic kind {step.kind!r}")
            if step.left not in names or step.right not in names:
                raise ConfigError(f"family {fam.name}: logic {step.name} bad branches")
            logic_kind = step.kind
        else:
            raise ConfigError(f"family {fam.name}: unknown step op {step.op!r}")
        names.add(step.name)
    if fam.steps[-1].op != "describe":
        raise ConfigError(f"family {fam.name}: last step must describe the output")

    expected = {
        "and_logic": logic_kind == "and",
        "or_logic": logic_kind == "or",
        "same_relate": has_same and logic_kind is None,
        "zero_relate": relates == 0 and logic_kind is None and not has_same,
        "one_relate": relates == 1 and logic_kind is None and not has_same,
        "two_relate": relates == 2 and logic_kind is None and not has_same,
        "three_relate": relates == 3 and logic_kind is None and not has_same,
    }
    if not expected[fam.category]:
        raise ConfigError(
            f"family {fam.name}: skeleton inconsistent with category {fam.category}"
        )
    if not fam.texts:
        raise ConfigError(f"family {fam.name}: no text templates")
    for text in fam.texts:
        if text.plural not in PLURAL_STYLES:
            raise ConfigError(f"family {fam.name}: bad plural style {text.plural!r}")
        missing = slots - _placeholders(text.pattern)
        if missing:
            raise ConfigError(
                f"family {fam.name}: text {text.pattern!r} missing slots {sorted(missing)}"
            )


def _family_from_dict(doc):
    steps = tuple(
        Step(
            op=s["op"],
            name=s["name"],
            source=s.get("source"),
            anchor=s.get("anchor"),
            unique=bool(s.get("unique", False)),
            decor=bool(s.get("decor", False)),
            kind=s.get("kind"),
            left=s.get("left"),
            right=s.get("right"),
        )
        for s in doc["steps"]
    )
    fam = TemplateFamily(
        name=doc["name"],
        category=doc["category"],
        steps=steps,
        texts=(),
    )
    texts = tuple(
        TextTemplate(pattern=t["pattern"], plural=t["plural"], family=fam)
        for t in doc["texts"]
    )
    object.__setattr__(fam, "texts", texts)
    _validate_family(fam)
    return fam


@dataclass(frozen=True)
class Catalog:
    families: tuple
    weights: tuple  # sampling weight per family, aligned with `families`

    def by_name(self, name):
        for fam in self.families:
            if fam.name == name:
                return fam
        raise KeyError(name)

    def category_counts(self):
        counts = {c: 0 for c in CATEGORIES}
        for fam in self.families:
            counts[fam.category] += 1
        return counts

    def sample_family(self, rng):
        total = sum(self.weights)
        x = rng.uniform(0.0, total)
        acc = 0.0
        for fam, w in zip(self.families, self.weights):
            acc += w
            if x < acc:
                return fam
        return self.families[-1]


def compute_weights(families):
    """Per-family sampling weights: families in categories with fewer
    families than the catalog median are boosted."""
    counts = {}
    for fam in families:
        counts[fam.category] = counts.get(fam.category, 0) + 1
    median = statistics.median(counts.values())
    return tuple(
        SMALL_CATEGORY_BOOST if counts[fam.category] < median else 1.0
        for fam in families
    )


def load_catalog():
    files = resources.files("refdiag").joinpath("templates")
    docs = []
    for entry in sorted(files.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            docs.append(json.loads(entry.read_text()))
    if not docs:
        raise ConfigError("template catalog is empty")
    families = tuple(_family_from_dict(doc) for doc in docs)
    names = [f.name for f in families]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate family names in catalog")
    return Catalog(families=families, weights=compute_weights(families))


def find_step(family, name):
    for step in family.steps:
        if step.name == name:
            return step
    raise TemplateError(f"family {family.name} has no step {name!r}")
