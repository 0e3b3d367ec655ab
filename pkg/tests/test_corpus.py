import copy

import pytest
import yaml

from relscene.corpus import (
    CLASSES_PER_CATEGORY,
    NUM_CLASSES,
    SUB_RELATIONS,
    default_corpus_path,
    load_corpus,
)
from relscene.errors import CorpusError


def _raw_default():
    return yaml.safe_load(default_corpus_path().read_text())


def _write(tmp_path, raw):
    path = tmp_path / "corpus.yaml"
    path.write_text(yaml.safe_dump(raw))
    return path


class TestLoadCorpus:
    def test_default_counts(self, corpus):
        assert len(corpus.classes) == NUM_CLASSES
        assert len(corpus.relations) == len(SUB_RELATIONS)
        assert sum(len(t) for t in corpus.templates.values()) == 55

    def test_five_per_main_category(self, corpus):
        by_cat = {}
        for c in corpus.classes:
            by_cat.setdefault(c.main_category, []).append(c)
        assert all(len(v) == CLASSES_PER_CATEGORY for v in by_cat.values())

    def test_labels_pairwise_distinct(self, corpus):
        labels = [c.sub_category for c in corpus.classes]
        assert len(set(labels)) == len(labels)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusError, match="not found"):
            load_corpus(tmp_path / "nope.yaml")

    def test_24_classes_rejected(self, tmp_path):
        raw = _raw_default()
        raw["classes"] = raw["classes"][:-1]
        with pytest.raises(CorpusError, match="category corpus incomplete"):
            load_corpus(_write(tmp_path, raw))

    def test_duplicate_class_id_rejected(self, tmp_path):
        raw = _raw_default()
        raw["classes"][1]["id"] = 0
        with pytest.raises(CorpusError, match="duplicate class id"):
            load_corpus(_write(tmp_path, raw))

    def test_template_for_unknown_relation_rejected(self, tmp_path):
        raw = _raw_default()
        raw["templates"]["meanwhile"] = ["{e1} then {e2}"] * 5
        with pytest.raises(CorpusError, match="unknown relation"):
            load_corpus(_write(tmp_path, raw))

    def test_wrong_template_count_rejected(self, tmp_path):
        raw = _raw_default()
        raw["templates"]["before"] = raw["templates"]["before"][:4]
        with pytest.raises(CorpusError, match="exactly 5 templates"):
            load_corpus(_write(tmp_path, raw))

    def test_fixed_arities(self, corpus):
        assert corpus.relation("count").arity == (2, 5)
        assert corpus.relation("not").arity == (1, 1)
        assert corpus.relation("ifthenelse").arity == (3, 3)
        for sub in ("before", "after", "simultaneity", "closefirst",
                    "farfirst", "equaldist", "and", "or"):
            assert corpus.relation(sub).arity == (2, 2)


class TestRenderPrompt:
    def test_before_sample(self, corpus):
        prompt = corpus.render_prompt(
            corpus.relation("before"),
            [corpus.class_by_label("dog barking"), corpus.class_by_label("cat meowing")],
            0,
        )
        assert prompt == "generate dog barking audio, followed by cat meowing"

    def test_count_sample(self, corpus):
        prompt = corpus.render_prompt(
            corpus.relation("count"),
            [
                corpus.class_by_label("dog barking"),
                corpus.class_by_label("car horn"),
                corpus.class_by_label("talking"),
            ],
            0,
        )
        assert prompt == "produce 3 audios: dog barking, car horn and talking."

    def test_not_names_the_event(self, corpus):
        prompt = corpus.render_prompt(
            corpus.relation("not"), [corpus.class_by_label("dog barking")], 0
        )
        assert "dog barking" in prompt

    def test_pure_function(self, corpus):
        rel = corpus.relation("after")
        events = [corpus.classes[3], corpus.classes[19]]
        assert corpus.render_prompt(rel, events, 2) == corpus.render_prompt(rel, events, 2)

    def test_arity_mismatch(self, corpus):
        with pytest.raises(CorpusError, match="expects"):
            corpus.render_prompt(corpus.relation("before"), [corpus.classes[0]], 0)

    def test_template_index_out_of_range(self, corpus):
        with pytest.raises(CorpusError, match="out of range"):
            corpus.render_prompt(
                corpus.relation("before"), [corpus.classes[0], corpus.classes[1]], 5
            )

    def test_every_template_renders_fully(self, corpus):
        for sub, spec in corpus.relations.items():
            events = [corpus.classes[i] for i in range(spec.arity[1])]
            for idx in range(5):
                prompt = corpus.render_prompt(spec, events, idx)
                assert "{" not in prompt and "}" not in prompt
