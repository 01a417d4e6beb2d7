"""Prompt construction: turn pivotal records and spurious associations into
text descriptions suitable for sourcing or generating new training images.

Caption enhancement is deliberately mechanical string surgery — swap the
generic subject for the class label, append coarse scene facts — so outputs
are reproducible and reviewable. Mitigation prompts pair a class with the
object it was spuriously tied to, optionally across demographic variants.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .audit import Weakspot
from .data import ClassVocabulary, DatasetBundle, Record, Scene
from .errors import EmptyLabel, IoFailure, MissingCaption
from .review import Association

# Generic subject phrases that captioning models produce; longest first so a
# longer phrase wins over a shorter one matching at the same position.
SUBJECT_LEXICON = (
    "a person",
    "a woman",
    "someone",
    "people",
    "a man",
    "they",
    "she",
    "he",
)

_SUBJECT_RE = re.compile(
    r"\b(?:" + "|".join(re.escape(t) for t in SUBJECT_LEXICON) + r")\b",
    re.IGNORECASE,
)

PURPOSES = ("weakspot", "mitigation")


@dataclass(frozen=True)
class TextualDescription:
    text: str
    purpose: str
    target_class: str
    pivotal_id: str | None = None
    tags: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "text": self.text,
            "purpose": self.purpose,
            "target_class": self.target_class,
            "pivotal_id": self.pivotal_id,
            "tags": list(self.tags),
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "TextualDescription":
        return cls(
            text=data["text"],
            purpose=data["purpose"],
            target_class=data["target_class"],
            pivotal_id=data.get("pivotal_id"),
            tags=tuple(data.get("tags", ())),
        )


@dataclass(frozen=True)
class DescriptionSet:
    """Deduplicated, ordered prompt collection plus a skip counter."""

    entries: tuple[TextualDescription, ...]
    skipped_missing_caption: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def humanize_label(label: str) -> str:
    """Class label to a plain phrase: underscores to spaces, lowercased."""
    if not label:
        raise EmptyLabel("label must be non-empty")
    return label.replace("_", " ").lower()


def replace_subject(caption: str, class_phrase: str) -> str:
    """Substitute the caption's generic subject with ``a {class_phrase}``.

    The earliest lexicon token (longest wins on position ties) is replaced,
    matched case-insensitively on word boundaries. Without a match the class
    phrase is prefixed — unless the caption already names it, which keeps a
    second pass from stacking prefixes.
    """
    if not class_phrase:
        raise EmptyLabel("class_phrase must be non-empty")
    substituted, n = _SUBJECT_RE.subn(f"a {class_phrase}", caption, count=1)
    if n:
        return substituted
    already = re.search(
        r"\ba " + re.escape(class_phrase) + r"\b", caption, re.IGNORECASE
    )
    if already:
        return caption
    return f"a {class_phrase}, {caption}"


def append_scene(text: str, scene: Scene | None) -> str:
    """Suffix coarse scene facts: indoors/outdoors, then the venue."""
    if scene is None:
        return text
    out = text
    if scene.environment == "indoor":
        out += ", indoors"
    elif scene.environment == "outdoor":
        out += ", outdoors"
    if scene.venue is not None:
        out += f", in a {scene.venue.replace('_', ' ')}"
    return out


def describe_pivotal(record: Record, vocabulary: ClassVocabulary) -> TextualDescription:
    """Enhanced caption for one pivotal record, targeting its true class."""
    if record.caption is None:
        raise MissingCaption(f"record {record.id!r} has no caption")
    vocabulary.position(record.true_class)
    phrase = humanize_label(record.true_class)
    text = append_scene(replace_subject(record.caption, phrase), record.scene)
    return TextualDescription(
        text=text,
        purpose="weakspot",
        target_class=record.true_class,
        pivotal_id=record.id,
        tags=(),
    )


def mitigation_prompts(
    spurious: Association,
    attribute_variants: Sequence[str] = (),
) -> list[TextualDescription]:
    """Prompts pairing the spuriously associated object with its class.

    One neutral base prompt plus one per attribute variant; the variant
    phrase replaces the leading article.
    """
    class_phrase = humanize_label(spurious.predicted_class)
    object_phrase = humanize_label(spurious.object_label)
    out = [
        TextualDescription(
            text=f"a {class_phrase} with a {object_phrase}",
            purpose="mitigation",
            target_class=spurious.predicted_class,
            pivotal_id=None,
            tags=(spurious.object_label,),
        )
    ]
    for variant in attribute_variants:
        out.append(
            TextualDescription(
                text=f"{variant} {class_phrase} with a {object_phrase}",
                purpose="mitigation",
                target_class=spurious.predicted_class,
                pivotal_id=None,
                tags=(spurious.object_label, variant),
            )
        )
    return out


def build_set(
    weakspots: Sequence[Weakspot],
    spurious_associations: Sequence[Association],
    bundle: DatasetBundle,
    attribute_variants: Sequence[str] = (),
) -> DescriptionSet:
    """Union of pivotal descriptions and mitigation prompts, deduplicated.

    Weakspot entries come first, sorted by pivotal id; mitigation entries
    follow in (object_label, predicted_class) order. Pivotal records without
    captions are skipped and counted rather than failing the whole set.
    """
    entries: list[TextualDescription] = []
    skipped = 0
    for spot in sorted(weakspots, key=lambda w: w.pivotal_id):
        record = bundle.record(spot.pivotal_id)
        try:
            entries.append(describe_pivotal(record, bundle.vocabulary))
        except MissingCaption:
            skipped += 1
    for assoc in sorted(
        spurious_associations, key=lambda a: (a.object_label, a.predicted_class)
    ):
        entries.extend(mitigation_prompts(assoc, attribute_variants))
    seen: set[tuple[str, str]] = set()
    unique: list[TextualDescription] = []
    for entry in entries:
        key = (entry.text, entry.target_class)
        if key in seen:
            continue
        seen.add(key)
        unique.append(entry)
    return DescriptionSet(entries=tuple(unique), skipped_missing_caption=skipped)


def save_descriptions(descriptions: Iterable[TextualDescription], path: str | Path) -> None:
    """Write descriptions as JSONL, one prompt per line."""
    path = Path(path)
    lines = [
        json.dumps(d.to_json_dict(), ensure_ascii=False, separators=(",", ":"))
        for d in descriptions
    ]
    try:
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        tmp.replace(path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_descriptions(path: str | Path) -> list[TextualDescription]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return [
        TextualDescription.from_json_dict(json.loads(line))
        # "\n" only: JSON strings may contain other Unicode line separators
        for line in text.split("\n")
        if line.strip()
    ]
