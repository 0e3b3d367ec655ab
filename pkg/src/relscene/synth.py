"""Scene planning, rendering and dataset generation.

A scene is a 10 s, 16 kHz mono mixture built by linearly blending placed
seed clips so that the placements satisfy one sub-relation's construction
constraints. Planning is deterministic for a fixed rng seed and validates
each candidate plan through the detection grid before accepting it, so
oracle detections of a planned scene always satisfy the scene's relation.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .corpus import SUB_RELATIONS, AudioEventClass, CorpusBundle, RelationSpec
from .errors import PlacementError
from .seeds import SeedLibrary
from .wavio import SAMPLE_RATE, write_wav

SCENE_SECONDS = 10.0
SCENE_SAMPLES = int(SCENE_SECONDS * SAMPLE_RATE)

# Planning defaults chosen so every sampled scene fits the 10 s span.
GAP_RANGE = (0.3, 1.5)
SPATIAL_GAP_RANGE = (1.0, 1.5)  # keeps 0.5 s grid-quantized spans disjoint
FAR_GAIN_RANGE = (0.3, 0.6)
PAIR_DURATION_CAP = 4.0
MIN_COUNT_GAP = 0.3
MAX_PLAN_RETRIES = 100


@dataclass(frozen=True)
class EventPlacement:
    class_id: int
    source_id: int
    slice_index: int
    start: float
    end: float
    gain: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class SceneManifest:
    scene_id: str
    sub_relation: str
    prompt: str
    template_index: int
    classes: list[int]  # semantic ground-truth order (prompt order)
    placements: list[EventPlacement]
    branch: int | None = None
    references: list[list[int]] | None = None
    forbidden_class: int | None = None
    audio_path: str | None = None

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "relation": self.sub_relation,
            "prompt": self.prompt,
            "template_index": self.template_index,
            "classes": list(self.classes),
            "placements": [
                {
                    "class_id": p.class_id,
                    "source_id": p.source_id,
                    "slice_index": p.slice_index,
                    "start": round(p.start, 6),
                    "end": round(p.end, 6),
                    "gain": round(p.gain, 6),
                }
                for p in self.placements
            ],
            "branch": self.branch,
            "references": self.references,
            "forbidden_class": self.forbidden_class,
            "audio_path": self.audio_path,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SceneManifest":
        return cls(
            scene_id=raw["scene_id"],
            sub_relation=raw["relation"],
            prompt=raw["prompt"],
            template_index=raw["template_index"],
            classes=list(raw["classes"]),
            placements=[
                EventPlacement(
                    class_id=p["class_id"],
                    source_id=p["source_id"],
                    slice_index=p["slice_index"],
                    start=p["start"],
                    end=p["end"],
                    gain=p["gain"],
                )
                for p in raw["placements"]
            ],
            branch=raw.get("branch"),
            references=raw.get("references"),
            forbidden_class=raw.get("forbidden_class"),
            audio_path=raw.get("audio_path"),
        )


def count_duration_cap(n_events: int) -> float:
    """Per-event duration cap guaranteeing n events plus minimum gaps fit 10 s."""
    return float(math.floor((SCENE_SECONDS - MIN_COUNT_GAP * (n_events - 1)) / n_events))


def _pick_clip(rng: np.random.Generator, library: SeedLibrary, class_id: int,
               cap: float) -> tuple:
    clips = library.clips(class_id)
    clip = clips[int(rng.integers(len(clips)))]
    return clip, min(clip.duration, cap)


def _placement(clip, start: float, duration: float, gain: float) -> EventPlacement:
    return EventPlacement(
        class_id=clip.class_id,
        source_id=clip.source_id,
        slice_index=clip.slice_index,
        start=start,
        end=start + duration,
        gain=gain,
    )


def _plan_sequence(rng, library, classes, caps, gap_range, gains):
    """Non-overlapping left-to-right placements with random gaps and offset."""
    picks = [_pick_clip(rng, library, c.id, cap) for c, cap in zip(classes, caps)]
    durations = [d for _, d in picks]
    gaps = [float(rng.uniform(*gap_range)) for _ in range(len(classes) - 1)]
    slack = SCENE_SECONDS - sum(durations) - sum(gaps)
    if slack < 0:
        gaps = [gap_range[0]] * (len(classes) - 1)
        slack = SCENE_SECONDS - sum(durations) - sum(gaps)
        if slack < 0:
            raise PlacementError("duration budget exhausted")
    t = float(rng.uniform(0, slack))
    placements = []
    for (clip, dur), gain in zip(picks, gains):
        placements.append(_placement(clip, t, dur, gain))
        t += dur
        if len(placements) < len(picks):
            t += gaps[len(placements) - 1]
    return placements


def _plan_once(relation: RelationSpec, events: list[AudioEventClass],
               library: SeedLibrary, rng: np.random.Generator) -> SceneManifest:
    sub = relation.sub_relation
    manifest = SceneManifest(
        scene_id="",
        sub_relation=sub,
        prompt="",
        template_index=0,
        classes=[e.id for e in events],
        placements=[],
    )

    if sub in ("before", "and"):
        manifest.placements = _plan_sequence(
            rng, library, events, [PAIR_DURATION_CAP] * 2, GAP_RANGE, [1.0, 1.0]
        )
    elif sub == "after":
        # events[0] happens after events[1]: chronological order is reversed.
        manifest.placements = _plan_sequence(
            rng, library, [events[1], events[0]], [PAIR_DURATION_CAP] * 2,
            GAP_RANGE, [1.0, 1.0],
        )
    elif sub == "simultaneity":
        a, da = _pick_clip(rng, library, events[0].id, 5.0)
        b, db = _pick_clip(rng, library, events[1].id, 5.0)
        (long_clip, dl), (short_clip, ds) = sorted(
            [(a, da), (b, db)], key=lambda x: -x[1]
        )
        t0 = float(rng.uniform(0, SCENE_SECONDS - dl))
        offset = float(rng.uniform(0, dl - ds))
        manifest.placements = [
            _placement(long_clip, t0, dl, 1.0),
            _placement(short_clip, t0 + offset, ds, 1.0),
        ]
    elif sub in ("closefirst", "farfirst", "equaldist"):
        clip, dur = _pick_clip(rng, library, events[0].id, PAIR_DURATION_CAP)
        gap = float(rng.uniform(*SPATIAL_GAP_RANGE))
        slack = SCENE_SECONDS - 2 * dur - gap
        if slack < 0:
            raise PlacementError("duration budget exhausted")
        t0 = float(rng.uniform(0, slack))
        far = float(rng.uniform(*FAR_GAIN_RANGE))
        gains = {
            "closefirst": (1.0, far),
            "farfirst": (far, 1.0),
            "equaldist": (1.0, 1.0),
        }[sub]
        manifest.placements = [
            _placement(clip, t0, dur, gains[0]),
            _placement(clip, t0 + dur + gap, dur, gains[1]),
        ]
    elif sub == "count":
        cap = count_duration_cap(len(events))
        manifest.placements = _plan_sequence(
            rng, library, events, [cap] * len(events),
            (MIN_COUNT_GAP, 1.0), [1.0] * len(events),
        )
    elif sub == "or":
        branch = int(rng.integers(2))
        clip, dur = _pick_clip(rng, library, events[branch].id, 5.0)
        t0 = float(rng.uniform(0, SCENE_SECONDS - dur))
        manifest.placements = [_placement(clip, t0, dur, 1.0)]
        manifest.branch = branch
        manifest.references = [[events[0].id], [events[1].id]]
    elif sub == "not":
        manifest.placements = []
        manifest.forbidden_class = events[0].id
        manifest.classes = []
    elif sub == "ifthenelse":
        branch = int(rng.integers(2))
        if branch == 0:
            manifest.placements = _plan_sequence(
                rng, library, [events[0], events[1]], [PAIR_DURATION_CAP] * 2,
                GAP_RANGE, [1.0, 1.0],
            )
        else:
            clip, dur = _pick_clip(rng, library, events[2].id, 5.0)
            t0 = float(rng.uniform(0, SCENE_SECONDS - dur))
            manifest.placements = [_placement(clip, t0, dur, 1.0)]
        manifest.branch = branch
        manifest.references = [[events[0].id, events[1].id], [events[2].id]]
    else:
        raise PlacementError(f"unknown relation {sub!r}")

    # Serialize/deserialize rounding must not perturb the plan.
    manifest.placements = [
        replace(p, start=round(p.start, 6), end=round(p.end, 6), gain=round(p.gain, 6))
        for p in manifest.placements
    ]
    return manifest


def _check_category_constraint(relation: RelationSpec, events: list[AudioEventClass]):
    sub = relation.sub_relation
    if not relation.accepts_arity(len(events)):
        raise PlacementError(
            f"relation {sub!r} expects {relation.arity[0]}..{relation.arity[1]} "
            f"events, got {len(events)}"
        )
    if relation.category_constraint == "intra-category":
        if len({e.id for e in events}) != 1:
            raise PlacementError(f"relation {sub!r} requires one class placed twice")
    elif relation.category_constraint == "inter-category":
        mains = [e.main_category for e in events]
        if len(set(mains)) != len(mains):
            raise PlacementError(
                f"relation {sub!r} requires events from distinct main categories"
            )


def _oracle_holds(manifest: SceneManifest, library: SeedLibrary) -> bool:
    """True if oracle detections of this plan satisfy the scene's relation."""
    from .detect import oracle_detect  # local import: detect depends on synth types
    from .relations import RelationParams, check_relation

    detected = oracle_detect(manifest)
    sub = manifest.sub_relation
    if sub == "not":
        target = [manifest.forbidden_class]
    else:
        target = list(manifest.classes)
    waveform = None
    if sub in ("closefirst", "farfirst", "equaldist"):
        waveform = render_scene(manifest, library)
    holds, _ = check_relation(sub, detected, target, RelationParams(), waveform)
    return holds


def plan_scene(
    relation: RelationSpec,
    events: list[AudioEventClass],
    library: SeedLibrary,
    rng_seed: int,
    corpus: CorpusBundle | None = None,
    template_index: int = 0,
    scene_id: str = "scene",
) -> SceneManifest:
    """Plan relation-satisfying placements; deterministic for a fixed seed."""
    _check_category_constraint(relation, events)
    rng = np.random.default_rng(np.random.SeedSequence([rng_seed, 4021]))
    last_err = None
    for _ in range(MAX_PLAN_RETRIES):
        try:
            manifest = _plan_once(relation, events, library, rng)
        except PlacementError as exc:
            last_err = exc
            continue
        if _oracle_holds(manifest, library):
            manifest.scene_id = scene_id
            manifest.template_index = template_index
            if corpus is not None:
                manifest.prompt = corpus.render_prompt(relation, events, template_index)
            return manifest
    raise PlacementError(
        f"no feasible placement for {relation.sub_relation!r} after "
        f"{MAX_PLAN_RETRIES} retries"
        + (f": {last_err}" if last_err else "")
    )


def render_scene(manifest: SceneManifest, library: SeedLibrary) -> np.ndarray:
    """Linearly blend the placed clips; silent scene for empty placements."""
    out = np.zeros(SCENE_SAMPLES)
    for p in manifest.placements:
        if not (0 <= p.start < p.end <= SCENE_SECONDS + 1e-9):
            raise PlacementError(
                f"placement [{p.start}, {p.end}] outside [0, {SCENE_SECONDS}]"
            )
        clip = library.clip(p.class_id, p.source_id, p.slice_index)
        n = int(round(p.duration * SAMPLE_RATE))
        i0 = int(round(p.start * SAMPLE_RATE))
        seg = clip.samples[:n]
        out[i0 : i0 + len(seg)] += p.gain * seg
    peak = np.max(np.abs(out)) if len(manifest.placements) else 0.0
    if peak > 1.0:
        out *= 0.9 / peak
    return out


def validate_manifest(manifest: SceneManifest, corpus: CorpusBundle) -> None:
    """Independent re-check of the per-relation construction rules."""
    sub = manifest.sub_relation
    relation = corpus.relation(sub)
    ps = sorted(manifest.placements, key=lambda p: p.start)
    for p in ps:
        if not (0 <= p.start < p.end <= SCENE_SECONDS + 1e-9):
            raise PlacementError(f"{manifest.scene_id}: placement outside scene span")
        if p.gain <= 0:
            raise PlacementError(f"{manifest.scene_id}: non-positive gain")

    def non_overlap():
        for a, b in zip(ps, ps[1:]):
            if b.start < a.end - 1e-9:
                raise PlacementError(f"{manifest.scene_id}: placements overlap")

    if sub == "not":
        if manifest.placements or manifest.forbidden_class is None:
            raise PlacementError(f"{manifest.scene_id}: not-scene must be silent")
        return
    if sub in ("before", "after", "and"):
        if len(ps) != 2:
            raise PlacementError(f"{manifest.scene_id}: expected 2 placements")
        non_overlap()
        if sub != "and":
            first_sem = manifest.classes[0] if sub == "before" else manifest.classes[1]
            if ps[0].class_id != first_sem:
                raise PlacementError(
                    f"{manifest.scene_id}: chronological order contradicts relation"
                )
    elif sub == "simultaneity":
        if len(ps) != 2:
            raise PlacementError(f"{manifest.scene_id}: expected 2 placements")
        overlap = min(ps[0].end, ps[1].end) - max(ps[0].start, ps[1].start)
        shorter = min(p.duration for p in ps)
        if overlap < 0.5 * shorter - 1e-9:
            raise PlacementError(f"{manifest.scene_id}: insufficient temporal overlap")
    elif sub in ("closefirst", "farfirst", "equaldist"):
        if len(ps) != 2 or len({p.class_id for p in ps}) != 1:
            raise PlacementError(f"{manifest.scene_id}: need one class placed twice")
        non_overlap()
        if abs(ps[0].duration - ps[1].duration) > 1e-5:
            raise PlacementError(f"{manifest.scene_id}: durations must match")
        g0, g1 = ps[0].gain, ps[1].gain
        if sub == "closefirst" and not g0 >= (1 + 0.2) * g1:
            raise PlacementError(f"{manifest.scene_id}: closefirst gain margin violated")
        if sub == "farfirst" and not g1 >= (1 + 0.2) * g0:
            raise PlacementError(f"{manifest.scene_id}: farfirst gain margin violated")
        if sub == "equaldist" and abs(g0 - g1) > 1e-9:
            raise PlacementError(f"{manifest.scene_id}: equaldist gains must match")
    elif sub == "count":
        n = len(ps)
        if not 2 <= n <= 5:
            raise PlacementError(f"{manifest.scene_id}: count needs 2..5 events")
        non_overlap()
        mains = [corpus.class_by_id(p.class_id).main_category for p in ps]
        if len(set(mains)) != n:
            raise PlacementError(f"{manifest.scene_id}: count events not inter-category")
        cap = count_duration_cap(n)
        for p in ps:
            if p.duration > cap + 1e-6:
                raise PlacementError(f"{manifest.scene_id}: count duration cap exceeded")
    elif sub in ("or", "ifthenelse"):
        if manifest.branch is None or manifest.references is None:
            raise PlacementError(f"{manifest.scene_id}: missing branch/references")
        expected = manifest.references[manifest.branch]
        placed = [p.class_id for p in ps]
        if sorted(placed) != sorted(expected):
            raise PlacementError(
                f"{manifest.scene_id}: placements do not realize the recorded branch"
            )
        non_overlap()
        if sub == "ifthenelse" and manifest.branch == 0:
            if ps[0].class_id != manifest.classes[0]:
                raise PlacementError(
                    f"{manifest.scene_id}: condition event must precede its consequence"
                )
    else:
        raise PlacementError(f"unknown relation {sub!r}")


def _sample_events(
    relation: RelationSpec, corpus: CorpusBundle, rng: np.random.Generator
) -> list[AudioEventClass]:
    if relation.category_constraint == "intra-category":
        c = corpus.classes[int(rng.integers(len(corpus.classes)))]
        return [c, c]
    if relation.category_constraint == "inter-category":
        from .corpus import MAIN_CATEGORIES

        n = int(rng.integers(relation.arity[0], relation.arity[1] + 1))
        mains = rng.choice(len(MAIN_CATEGORIES), size=n, replace=False)
        events = []
        for m in mains:
            members = [
                c for c in corpus.classes if c.main_category == MAIN_CATEGORIES[int(m)]
            ]
            events.append(members[int(rng.integers(len(members)))])
        return events
    n = int(rng.integers(relation.arity[0], relation.arity[1] + 1))
    ids = rng.choice(len(corpus.classes), size=n, replace=False)
    return [corpus.classes[int(i)] for i in ids]


def gen_dataset(
    corpus: CorpusBundle,
    library: SeedLibrary,
    pairs_per_relation: int,
    rng_seed: int,
    out_dir: str | Path,
) -> Path:
    """Write a dataset directory: WAVs, manifests, prompts.tsv and an index."""
    if pairs_per_relation < 1:
        raise PlacementError("pairs_per_relation must be >= 1")
    out_dir = Path(out_dir)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    (out_dir / "manifests").mkdir(parents=True, exist_ok=True)

    index = []
    prompt_rows = []
    for rel_idx, sub in enumerate(SUB_RELATIONS):
        relation = corpus.relation(sub)
        for i in range(pairs_per_relation):
            rng = np.random.default_rng(
                np.random.SeedSequence([rng_seed, 101, rel_idx, i])
            )
            events = _sample_events(relation, corpus, rng)
            template_index = int(rng.integers(5))
            scene_id = f"{sub}_{i:04d}"
            manifest = plan_scene(
                relation,
                events,
                library,
                rng_seed=int(rng.integers(2**31)),
                corpus=corpus,
                template_index=template_index,
                scene_id=scene_id,
            )
            validate_manifest(manifest, corpus)
            audio_rel = f"audio/{scene_id}.wav"
            manifest.audio_path = audio_rel
            write_wav(out_dir / audio_rel, render_scene(manifest, library))
            manifest_path = out_dir / "manifests" / f"{scene_id}.json"
            manifest_path.write_text(
                json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n"
            )
            index.append(
                {
                    "scene_id": scene_id,
                    "relation": sub,
                    "main_relation": relation.main_relation,
                    "audio": audio_rel,
                    "manifest": f"manifests/{scene_id}.json",
                }
            )
            prompt_rows.append(f"{scene_id}\t{sub}\t{manifest.prompt}")

    (out_dir / "prompts.tsv").write_text(
        "scene_id\trelation\tprompt\n" + "\n".join(prompt_rows) + "\n"
    )
    (out_dir / "index.json").write_text(
        json.dumps(
            {
                "pairs_per_relation": pairs_per_relation,
                "rng_seed": rng_seed,
                "scenes": index,
            },
            sort_keys=True,
            indent=2,
        )
        + "\n"
    )
    return out_dir


def load_dataset(dataset_dir: str | Path) -> list[SceneManifest]:
    """Load every scene manifest listed in a dataset index."""
    dataset_dir = Path(dataset_dir)
    index = json.loads((dataset_dir / "index.json").read_text())
    manifests = []
    for entry in index["scenes"]:
        raw = json.loads((dataset_dir / entry["manifest"]).read_text())
        manifests.append(SceneManifest.from_dict(raw))
    return manifests


def dataset_checksum(dataset_dir: str | Path) -> str:
    """SHA-256 over every file in the dataset, path-ordered."""
    dataset_dir = Path(dataset_dir)
    digest = hashlib.sha256()
    for path in sorted(p for p in dataset_dir.rglob("*") if p.is_file()):
        digest.update(str(path.relative_to(dataset_dir)).encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()
