"""Procure new training samples from text descriptions.

Descriptions fan out into content-addressed requests, one per (description,
channel). Web-search and text-to-image channels speak a small HTTP contract
(a provider turns a prompt into image references, an embedder turns each
reference into a vector); the synthetic channel is a fully offline oracle
that samples around a pivotal point, pulled toward its true-class centroid.
Fulfilled batches are cached on disk by request id, so re-running a plan
performs no provider calls.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import httpx
import numpy as np

from .data import (
    EmbeddingStore,
    Record,
    load_embedding_store,
    save_embedding_store,
)
from .errors import (
    DimMismatch,
    EmbedderUnavailable,
    IoFailure,
    ProviderUnavailable,
)
from .prompts import TextualDescription

CHANNELS = ("web", "txt2img", "synthetic")

MAX_ATTEMPTS = 3
BACKOFF_START_SECONDS = 0.5
REQUEST_TIMEOUT_SECONDS = 30.0


@dataclass(frozen=True)
class ProcurementRequest:
    request_id: str
    description: TextualDescription
    channel: str
    count: int
    pivotal_id: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "description": self.description.to_json_dict(),
            "channel": self.channel,
            "count": self.count,
            "pivotal_id": self.pivotal_id,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "ProcurementRequest":
        return cls(
            request_id=data["request_id"],
            description=TextualDescription.from_json_dict(data["description"]),
            channel=data["channel"],
            count=int(data["count"]),
            pivotal_id=data.get("pivotal_id"),
        )


@dataclass(frozen=True)
class ProcuredBatch:
    request_id: str
    records: tuple[Record, ...]
    embeddings: EmbeddingStore

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class SyntheticParams:
    alpha: float = 0.5
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def request_id_of(text: str, channel: str, count: int) -> str:
    """Content hash identifying a request; stable across runs and machines."""
    canonical = json.dumps(
        {"channel": channel, "count": count, "text": text},
        ensure_ascii=False,
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def plan(
    descriptions: Sequence[TextualDescription],
    channels: Sequence[str],
    per_count: int,
) -> list[ProcurementRequest]:
    """One request per (description, channel), deduplicated by request id."""
    if per_count < 1:
        raise ValueError(f"per_count must be >= 1, got {per_count}")
    for channel in channels:
        if channel not in CHANNELS:
            raise ValueError(f"unknown channel {channel!r}, expected one of {CHANNELS}")
    seen: set[str] = set()
    out: list[ProcurementRequest] = []
    for description in descriptions:
        for channel in channels:
            rid = request_id_of(description.text, channel, per_count)
            if rid in seen:
                continue
            seen.add(rid)
            out.append(
                ProcurementRequest(
                    request_id=rid,
                    description=description,
                    channel=channel,
                    count=per_count,
                    pivotal_id=description.pivotal_id,
                )
            )
    return out


class ProviderClient(Protocol):
    """Turns a prompt into image references."""

    def generate(self, prompt: str, count: int) -> list[str]: ...


class EmbedderClient(Protocol):
    """Turns an image reference into an embedding vector."""

    def embed(self, image_ref: str) -> list[float]: ...


def _post_with_retries(
    post: Callable[..., httpx.Response],
    url: str,
    body: dict,
    sleeper: Callable[[float], None],
    describe: str,
) -> dict:
    """POST JSON with bounded retries and exponential backoff.

    Transport failures and 5xx responses are retried; anything else —
    including a malformed response body — fails immediately.
    """
    delay = BACKOFF_START_SECONDS
    last_error = "no attempt made"
    for attempt in range(MAX_ATTEMPTS):
        if attempt:
            sleeper(delay)
            delay *= 2
        try:
            response = post(url, json=body, timeout=REQUEST_TIMEOUT_SECONDS)
        except httpx.HTTPError as exc:
            last_error = f"transport error: {exc}"
            continue
        if response.status_code >= 500:
            last_error = f"server returned {response.status_code}"
            continue
        if response.status_code != 200:
            raise ProviderUnavailable(
                f"{describe}: {url} returned {response.status_code}"
            )
        try:
            return response.json()
        except ValueError as exc:
            raise ProviderUnavailable(
                f"{describe}: {url} returned unparseable JSON: {exc}"
            ) from exc
    raise ProviderUnavailable(
        f"{describe}: {url} unavailable after {MAX_ATTEMPTS} attempts ({last_error})"
    )


@dataclass
class HttpProvider:
    """Image provider speaking POST {endpoint}/generate."""

    endpoint: str
    sleeper: Callable[[float], None] = time.sleep
    client: httpx.Client | None = None

    def generate(self, prompt: str, count: int) -> list[str]:
        payload = _post_with_retries(
            self.client.post if self.client is not None else httpx.post,
            self.endpoint.rstrip("/") + "/generate",
            {"prompt": prompt, "count": count},
            self.sleeper,
            "provider",
        )
        try:
            items = payload["items"]
            return [str(item["image_ref"]) for item in items]
        except (KeyError, TypeError) as exc:
            raise ProviderUnavailable(
                f"provider: malformed response payload: {exc!r}"
            ) from exc


@dataclass
class HttpEmbedder:
    """Embedding service speaking POST {endpoint}/embed."""

    endpoint: str
    sleeper: Callable[[float], None] = time.sleep
    client: httpx.Client | None = None

    def embed(self, image_ref: str) -> list[float]:
        try:
            payload = _post_with_retries(
                self.client.post if self.client is not None else httpx.post,
                self.endpoint.rstrip("/") + "/embed",
                {"image_ref": image_ref},
                self.sleeper,
                "embedder",
            )
        except ProviderUnavailable as exc:
            raise EmbedderUnavailable(str(exc)) from exc
        try:
            return [float(v) for v in payload["embedding"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise EmbedderUnavailable(
                f"embedder: malformed response payload: {exc!r}"
            ) from exc


def _batch_records(
    request: ProcurementRequest, produced: int, provenance: str
) -> tuple[Record, ...]:
    return tuple(
        Record(
            id=f"{request.request_id[:16]}-{i:04d}",
            split="procured",
            true_class=request.description.target_class,
            attributes={},
            caption=request.description.text,
            scene=None,
            objects=None,
            provenance=provenance,
        )
        for i in range(produced)
    )


def _empty_store() -> EmbeddingStore:
    # Dimension is unknowable for a zero-item fulfillment; a 1-wide empty
    # matrix keeps the store valid and is skipped before any merge.
    return EmbeddingStore(rows=np.empty((0, 1), dtype=np.float32))


def _procure_via_http(
    request: ProcurementRequest,
    client: ProviderClient,
    embedder: EmbedderClient,
    provenance: str,
) -> ProcuredBatch:
    refs = client.generate(request.description.text, request.count)[: request.count]
    if not refs:
        return ProcuredBatch(
            request_id=request.request_id, records=(), embeddings=_empty_store()
        )
    vectors = []
    dim: int | None = None
    for ref in refs:
        vector = embedder.embed(ref)
        if dim is None:
            dim = len(vector)
        elif len(vector) != dim:
            raise DimMismatch(
                f"embedder returned mixed dimensions {dim} and {len(vector)}"
            )
        vectors.append(vector)
    return ProcuredBatch(
        request_id=request.request_id,
        records=_batch_records(request, len(refs), provenance),
        embeddings=EmbeddingStore.of(np.asarray(vectors, dtype=np.float32)),
    )


def procure_web(
    request: ProcurementRequest,
    client: ProviderClient,
    embedder: EmbedderClient,
) -> ProcuredBatch:
    """Fulfill a web-search request; partial results are fine."""
    if request.channel != "web":
        raise ValueError(f"procure_web got channel {request.channel!r}")
    return _procure_via_http(request, client, embedder, "web")


def procure_txt2img(
    request: ProcurementRequest,
    client: ProviderClient,
    embedder: EmbedderClient,
) -> ProcuredBatch:
    """Fulfill a text-to-image request; partial results are fine."""
    if request.channel != "txt2img":
        raise ValueError(f"procure_txt2img got channel {request.channel!r}")
    return _procure_via_http(request, client, embedder, "txt2img")


def procure_synthetic(
    request: ProcurementRequest,
    pivotal_vector: np.ndarray,
    class_centroid: np.ndarray,
    params: SyntheticParams,
) -> ProcuredBatch:
    """Deterministic offline samples around a pivotal point.

    Each sample is ``x + alpha·(mu − x) + eps`` with isotropic gaussian noise
    of per-coordinate std ``sigma``. Draws are keyed by (seed, request id,
    sample index), so results never depend on batch or scheduling order.
    """
    if request.channel != "synthetic":
        raise ValueError(f"procure_synthetic got channel {request.channel!r}")
    x = np.asarray(pivotal_vector, dtype=np.float64).reshape(-1)
    mu = np.asarray(class_centroid, dtype=np.float64).reshape(-1)
    if x.shape != mu.shape:
        raise DimMismatch(
            f"pivotal vector has dim {x.shape[0]}, centroid has {mu.shape[0]}"
        )
    anchor = x + params.alpha * (mu - x)
    request_key = int(request.request_id, 16)
    seed_key = params.seed & 0xFFFFFFFFFFFFFFFF
    rows = np.empty((request.count, x.shape[0]), dtype=np.float64)
    for i in range(request.count):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([seed_key, request_key, i]))
        )
        rows[i] = anchor + params.sigma * rng.standard_normal(x.shape[0])
    return ProcuredBatch(
        request_id=request.request_id,
        records=_batch_records(request, request.count, "synthetic"),
        embeddings=EmbeddingStore.of(rows.astype(np.float32)),
    )


# Synthetic requests need geometry the request itself does not carry: the
# pivotal point's vector and its true-class centroid.
AnchorResolver = Callable[[ProcurementRequest], tuple[np.ndarray, np.ndarray]]


@dataclass
class ChannelClients:
    """Everything fulfill() needs to dispatch a request by channel."""

    providers: Mapping[str, ProviderClient] = field(default_factory=dict)
    embedder: EmbedderClient | None = None
    anchors: AnchorResolver | None = None


@dataclass(frozen=True)
class RequestFailure:
    request_id: str
    channel: str
    error: str

    def to_json_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "channel": self.channel,
            "error": self.error,
        }


@dataclass(frozen=True)
class FulfillmentResult:
    batches: tuple[ProcuredBatch, ...]
    failures: tuple[RequestFailure, ...]
    provider_calls: int
    cache_hits: int

    def __iter__(self):
        return iter(self.batches)


def _cache_paths(cache_dir: Path, request_id: str) -> tuple[Path, Path]:
    return cache_dir / f"{request_id}.json", cache_dir / f"{request_id}.wsem"


def _cache_load(cache_dir: Path, request_id: str) -> ProcuredBatch | None:
    meta_path, store_path = _cache_paths(cache_dir, request_id)
    if not (meta_path.exists() and store_path.exists()):
        return None
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    records = tuple(Record.from_json_dict(entry) for entry in meta["records"])
    return ProcuredBatch(
        request_id=request_id,
        records=records,
        embeddings=load_embedding_store(store_path),
    )


def _cache_save(cache_dir: Path, batch: ProcuredBatch) -> None:
    meta_path, store_path = _cache_paths(cache_dir, batch.request_id)
    try:
        cache_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create cache dir {cache_dir}: {exc}") from exc
    save_embedding_store(batch.embeddings, store_path)
    payload = json.dumps(
        {
            "request_id": batch.request_id,
            "records": [r.to_json_dict() for r in batch.records],
        },
        ensure_ascii=False,
        sort_keys=True,
        indent=2,
    )
    try:
        tmp = meta_path.with_name(meta_path.name + ".tmp")
        tmp.write_text(payload + "\n", encoding="utf-8")
        tmp.replace(meta_path)
    except OSError as exc:
        raise IoFailure(f"cannot write {meta_path}: {exc}") from exc


def fulfill(
    requests: Sequence[ProcurementRequest],
    clients: ChannelClients,
    params: SyntheticParams,
    cache_dir: str | Path | None = None,
) -> FulfillmentResult:
    """Dispatch each request by channel, consulting the cache first.

    Per-request failures are collected, not raised, so one dead provider
    cannot sink the whole plan. With a warm cache no provider is contacted
    at all.
    """
    cache = Path(cache_dir) if cache_dir is not None else None
    batches: list[ProcuredBatch] = []
    failures: list[RequestFailure] = []
    provider_calls = 0
    cache_hits = 0
    for request in requests:
        if cache is not None:
            cached = _cache_load(cache, request.request_id)
            if cached is not None:
                batches.append(cached)
                cache_hits += 1
                continue
        try:
            if request.channel == "synthetic":
                if clients.anchors is None:
                    raise ProviderUnavailable(
                        "synthetic channel requires an anchor resolver"
                    )
                pivotal_vector, class_centroid = clients.anchors(request)
                batch = procure_synthetic(request, pivotal_vector, class_centroid, params)
            elif request.channel in ("web", "txt2img"):
                provider = clients.providers.get(request.channel)
                if provider is None or clients.embedder is None:
                    raise ProviderUnavailable(
                        f"no client configured for channel {request.channel!r}"
                    )
                provider_calls += 1
                if request.channel == "web":
                    batch = procure_web(request, provider, clients.embedder)
                else:
                    batch = procure_txt2img(request, provider, clients.embedder)
            else:
                raise ProviderUnavailable(f"unknown channel {request.channel!r}")
        except Exception as exc:  # noqa: BLE001 - aggregate, never abort the plan
            failures.append(
                RequestFailure(
                    request_id=request.request_id,
                    channel=request.channel,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
            continue
        if cache is not None:
            _cache_save(cache, batch)
        batches.append(batch)
    return FulfillmentResult(
        batches=tuple(batches),
        failures=tuple(failures),
        provider_calls=provider_calls,
        cache_hits=cache_hits,
    )


def save_requests(requests: Sequence[ProcurementRequest], path: str | Path) -> None:
    """Write the plan as JSONL, one request per line."""
    path = Path(path)
    lines = [
        json.dumps(r.to_json_dict(), ensure_ascii=False, separators=(",", ":"))
        for r in requests
    ]
    try:
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        tmp.replace(path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_requests(path: str | Path) -> list[ProcurementRequest]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return [
        ProcurementRequest.from_json_dict(json.loads(line))
        # "\n" only: JSON strings may contain other Unicode line separators
        for line in text.split("\n")
        if line.strip()
    ]
