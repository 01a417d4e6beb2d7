import numpy as np
import pytest

from weakaudit.data import EmbeddingStore, Record, bind


def make_records(labels, split="train", prefix="r", attributes=None, **extra):
    """Records named {prefix}0..{prefix}N-1 with the given true classes."""
    return [
        Record(
            id=f"{prefix}{i}",
            split=split,
            true_class=label,
            attributes=dict(attributes or {}),
            **extra,
        )
        for i, label in enumerate(labels)
    ]


def make_bundle(rows, labels, split="train", prefix="r", attributes=None, **extra):
    store = EmbeddingStore.of(np.asarray(rows, dtype=np.float32))
    return bind(store, make_records(labels, split=split, prefix=prefix,
                                    attributes=attributes, **extra))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
