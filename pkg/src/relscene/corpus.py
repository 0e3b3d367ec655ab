"""Audio event classes, relations and prompt templates.

The corpus is loaded from a YAML config (a default is shipped with the
package) into an immutable bundle: 25 event classes in 5 main categories,
11 sub-relations under 4 main relations, and 5 prompt templates per
sub-relation.
"""

from __future__ import annotations

import os
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .errors import CorpusError

MAIN_CATEGORIES = ("Human", "Animal", "Machinery", "HumanObject", "ObjectObject")

MAIN_RELATIONS = ("TemporalOrder", "SpatialDistance", "Count", "Compositionality")

SUB_RELATIONS = (
    "before",
    "after",
    "simultaneity",
    "closefirst",
    "farfirst",
    "equaldist",
    "count",
    "and",
    "or",
    "not",
    "ifthenelse",
)

# (main relation, (min arity, max arity), category constraint) per sub-relation.
RELATION_TABLE = {
    "before": ("TemporalOrder", (2, 2), "unconstrained"),
    "after": ("TemporalOrder", (2, 2), "unconstrained"),
    "simultaneity": ("TemporalOrder", (2, 2), "unconstrained"),
    "closefirst": ("SpatialDistance", (2, 2), "intra-category"),
    "farfirst": ("SpatialDistance", (2, 2), "intra-category"),
    "equaldist": ("SpatialDistance", (2, 2), "intra-category"),
    "count": ("Count", (2, 5), "inter-category"),
    "and": ("Compositionality", (2, 2), "unconstrained"),
    "or": ("Compositionality", (2, 2), "unconstrained"),
    "not": ("Compositionality", (1, 1), "unconstrained"),
    "ifthenelse": ("Compositionality", (3, 3), "unconstrained"),
}

TEMPLATES_PER_RELATION = 5
NUM_CLASSES = 25
CLASSES_PER_CATEGORY = 5

DEFAULT_CORPUS_ENV = "RELSCENE_CORPUS"


@dataclass(frozen=True)
class AudioEventClass:
    id: int
    main_category: str
    sub_category: str


@dataclass(frozen=True)
class RelationSpec:
    main_relation: str
    sub_relation: str
    arity: tuple[int, int]
    category_constraint: str

    def accepts_arity(self, n: int) -> bool:
        return self.arity[0] <= n <= self.arity[1]


def _join_labels(labels: list[str]) -> str:
    if len(labels) == 1:
        return labels[0]
    return ", ".join(labels[:-1]) + " and " + labels[-1]


class CorpusBundle:
    """Immutable corpus: classes, relations and templates."""

    def __init__(
        self,
        classes: list[AudioEventClass],
        relations: dict[str, RelationSpec],
        templates: dict[str, tuple[str, ...]],
        seed_dir: str | None = None,
    ):
        self.classes = tuple(classes)
        self.relations = dict(relations)
        self.templates = {k: tuple(v) for k, v in templates.items()}
        self.seed_dir = seed_dir
        self._by_id = {c.id: c for c in self.classes}
        self._by_label = {c.sub_category: c for c in self.classes}

    def class_by_id(self, class_id: int) -> AudioEventClass:
        try:
            return self._by_id[class_id]
        except KeyError:
            raise CorpusError(f"unknown class id {class_id}") from None

    def class_by_label(self, label: str) -> AudioEventClass:
        try:
            return self._by_label[label]
        except KeyError:
            raise CorpusError(f"unknown category label {label!r}") from None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(c.sub_category for c in self.classes)

    def relation(self, sub_relation: str) -> RelationSpec:
        try:
            return self.relations[sub_relation]
        except KeyError:
            raise CorpusError(f"unknown relation {sub_relation!r}") from None

    def render_prompt(
        self,
        relation: RelationSpec,
        events: list[AudioEventClass],
        template_index: int,
    ) -> str:
        """Render a text prompt; event order encodes the ground-truth ordering."""
        if not relation.accepts_arity(len(events)):
            raise CorpusError(
                f"relation {relation.sub_relation!r} expects "
                f"{relation.arity[0]}..{relation.arity[1]} events, got {len(events)}"
            )
        tmpls = self.templates[relation.sub_relation]
        if not 0 <= template_index < len(tmpls):
            raise CorpusError(
                f"template index {template_index} out of range for "
                f"{relation.sub_relation!r}"
            )
        labels = [e.sub_category for e in events]
        fields = {f"e{i + 1}": lab for i, lab in enumerate(labels)}
        fields["n"] = str(len(events))
        fields["events"] = _join_labels(labels)
        template = tmpls[template_index]
        try:
            return template.format(**fields)
        except (KeyError, IndexError) as exc:
            raise CorpusError(
                f"template {template_index} of {relation.sub_relation!r} has an "
                f"unbound placeholder: {exc}"
            ) from exc


def _template_placeholders(template: str) -> set[str]:
    return {
        field for _, field, _, _ in string.Formatter().parse(template) if field
    }


def _validate_classes(raw: list) -> list[AudioEventClass]:
    if not isinstance(raw, list) or len(raw) != NUM_CLASSES:
        raise CorpusError(
            f"category corpus incomplete: expected {NUM_CLASSES} classes, "
            f"got {0 if not isinstance(raw, list) else len(raw)}"
        )
    classes = []
    for entry in raw:
        try:
            cls = AudioEventClass(
                id=int(entry["id"]),
                main_category=str(entry["main"]),
                sub_category=str(entry["label"]),
            )
        except (TypeError, KeyError) as exc:
            raise CorpusError(f"malformed class entry {entry!r}") from exc
        if cls.main_category not in MAIN_CATEGORIES:
            raise CorpusError(f"unknown main category {cls.main_category!r}")
        classes.append(cls)
    ids = [c.id for c in classes]
    if len(set(ids)) != NUM_CLASSES:
        raise CorpusError("duplicate class id in category corpus")
    if set(ids) != set(range(NUM_CLASSES)):
        raise CorpusError("class ids must be dense in 0..24")
    labels = [c.sub_category for c in classes]
    if len(set(labels)) != NUM_CLASSES:
        raise CorpusError("duplicate sub-category label in category corpus")
    for cat in MAIN_CATEGORIES:
        n = sum(1 for c in classes if c.main_category == cat)
        if n != CLASSES_PER_CATEGORY:
            raise CorpusError(
                f"category corpus incomplete: {cat} has {n} sub-categories, "
                f"expected {CLASSES_PER_CATEGORY}"
            )
    return sorted(classes, key=lambda c: c.id)


def _validate_relations(raw: list) -> dict[str, RelationSpec]:
    if not isinstance(raw, list):
        raise CorpusError("relations section must be a list")
    relations = {}
    for entry in raw:
        try:
            spec = RelationSpec(
                main_relation=str(entry["main"]),
                sub_relation=str(entry["sub"]),
                arity=(int(entry["arity"][0]), int(entry["arity"][1])),
                category_constraint=str(entry["category_constraint"]),
            )
        except (TypeError, KeyError, IndexError) as exc:
            raise CorpusError(f"malformed relation entry {entry!r}") from exc
        if spec.sub_relation not in RELATION_TABLE:
            raise CorpusError(f"unknown sub-relation {spec.sub_relation!r}")
        main, arity, constraint = RELATION_TABLE[spec.sub_relation]
        if (spec.main_relation, spec.arity, spec.category_constraint) != (
            main,
            arity,
            constraint,
        ):
            raise CorpusError(
                f"relation {spec.sub_relation!r} must be "
                f"({main}, arity {arity}, {constraint})"
            )
        if spec.sub_relation in relations:
            raise CorpusError(f"duplicate relation {spec.sub_relation!r}")
        relations[spec.sub_relation] = spec
    missing = set(SUB_RELATIONS) - set(relations)
    if missing:
        raise CorpusError(f"relation corpus incomplete: missing {sorted(missing)}")
    return relations


def _validate_templates(raw: dict, relations: dict[str, RelationSpec]) -> dict:
    if not isinstance(raw, dict):
        raise CorpusError("templates section must be a mapping")
    for sub in raw:
        if sub not in relations:
            raise CorpusError(f"template references unknown relation {sub!r}")
    templates = {}
    for sub, spec in relations.items():
        tmpls = raw.get(sub)
        if not isinstance(tmpls, list) or len(tmpls) != TEMPLATES_PER_RELATION:
            raise CorpusError(
                f"relation {sub!r} must have exactly "
                f"{TEMPLATES_PER_RELATION} templates"
            )
        allowed = {f"e{i + 1}" for i in range(spec.arity[1])} | {"n", "events"}
        for i, t in enumerate(tmpls):
            bad = _template_placeholders(str(t)) - allowed
            if bad:
                raise CorpusError(
                    f"template {i} of {sub!r} uses unknown placeholders {sorted(bad)}"
                )
        templates[sub] = tuple(str(t) for t in tmpls)
    return templates


def default_corpus_path() -> Path:
    env = os.environ.get(DEFAULT_CORPUS_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("relscene").joinpath("data/corpus.yaml")))


def load_corpus(config_path: str | Path | None = None) -> CorpusBundle:
    """Load and validate a corpus config; None loads the shipped default."""
    path = Path(config_path) if config_path is not None else default_corpus_path()
    if not path.is_file():
        raise CorpusError(f"corpus config not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise CorpusError(f"corpus config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise CorpusError(f"corpus config {path} must be a mapping")
    classes = _validate_classes(raw.get("classes"))
    relations = _validate_relations(raw.get("relations"))
    templates = _validate_templates(raw.get("templates", {}), relations)
    seed_dir = raw.get("seed_dir")
    if seed_dir is not None:
        seed_path = (path.parent / seed_dir).resolve()
        if not seed_path.is_dir():
            raise CorpusError(f"seed-audio directory not found: {seed_path}")
        seed_dir = str(seed_path)
    return CorpusBundle(classes, relations, templates, seed_dir=seed_dir)
