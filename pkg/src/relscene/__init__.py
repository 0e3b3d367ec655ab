"""Relation-aware sound scene synthesis and multi-stage evaluation toolkit."""

from .corpus import (
    AudioEventClass,
    CorpusBundle,
    RelationSpec,
    SUB_RELATIONS,
    load_corpus,
)
from .detect import (
    DetectedEvent,
    EventSet,
    oracle_detect,
    read_events,
    template_detect,
    threshold_filter,
    write_events,
)
from .evaluate import (
    EvalReport,
    add_general_metrics,
    evaluate_dataset,
    read_embeddings,
    write_embeddings,
)
from .metrics import (
    EmbeddingSet,
    MsrConfig,
    MsrScores,
    amsr,
    frechet_distance,
    kl_score,
    mamsr,
    parsimony_score,
    presence_score,
    relation_score,
    select_reference,
)
from .relations import RelationParams, check_relation, loudness
from .seeds import SeedLibrary, build_seed_corpus
from .synth import (
    EventPlacement,
    SceneManifest,
    gen_dataset,
    load_dataset,
    plan_scene,
    render_scene,
    validate_manifest,
)

__version__ = "0.1.0"
