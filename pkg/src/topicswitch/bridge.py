"""HTTP client for the external embedding bridge.

Wire protocol: ``POST /embed`` with ``{"texts": [...]}`` returns
``{"vectors": [[...], ...], "dim": n}``; ``GET /health`` returns
``{"status": "ok", "dim": n, "model": "..."}``.  Anything else is a
protocol error.  Connection failures map to BridgeUnreachable so the
caller can distinguish "server down" from "server confused".
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import requests

from .encoder import EmbeddingVector
from .errors import BridgeProtocolError, BridgeUnreachable, DimensionMismatch

DEFAULT_TIMEOUT = 30.0
MAX_BATCH = 64


def _post_embed(endpoint: str, texts: Sequence[str], timeout: float) -> tuple[list, int]:
    url = endpoint.rstrip("/") + "/embed"
    try:
        response = requests.post(url, json={"texts": list(texts)}, timeout=timeout)
    except (requests.ConnectionError, requests.Timeout) as exc:
        raise BridgeUnreachable(f"cannot reach bridge at {url}: {exc}") from exc
    if response.status_code != 200:
        raise BridgeProtocolError(f"bridge returned HTTP {response.status_code}: {response.text[:200]}")
    try:
        payload = response.json()
    except ValueError as exc:
        raise BridgeProtocolError(f"bridge response is not JSON: {exc}") from exc
    if (
        not isinstance(payload, dict)
        or not isinstance(payload.get("vectors"), list)
        or not isinstance(payload.get("dim"), int)
    ):
        raise BridgeProtocolError("bridge response missing 'vectors' list or 'dim' int")
    return payload["vectors"], payload["dim"]


def embed_via_bridge(
    texts: Sequence[str],
    endpoint: str,
    timeout: float = DEFAULT_TIMEOUT,
) -> list[EmbeddingVector]:
    """Embed texts through the bridge, preserving order.

    Requests are chunked at the bridge's batch cap.  Raises
    BridgeUnreachable, BridgeProtocolError, or DimensionMismatch when
    vector lengths disagree with the declared dimension.
    """
    if not texts:
        return []
    vectors: list[EmbeddingVector] = []
    declared: int | None = None
    for start in range(0, len(texts), MAX_BATCH):
        chunk = texts[start : start + MAX_BATCH]
        raw, dim = _post_embed(endpoint, chunk, timeout)
        if declared is None:
            declared = dim
        elif dim != declared:
            raise BridgeProtocolError(f"bridge changed its dimension: {declared} -> {dim}")
        if len(raw) != len(chunk):
            raise BridgeProtocolError(f"sent {len(chunk)} texts, received {len(raw)} vectors")
        for vec in raw:
            if not isinstance(vec, list) or len(vec) != declared:
                raise DimensionMismatch(
                    f"vector length {len(vec) if isinstance(vec, list) else 'n/a'} "
                    f"!= declared dim {declared}"
                )
            vectors.append(EmbeddingVector(np.asarray(vec, dtype=np.float64)))
    return vectors


class BridgeBackend:
    """Embedding backend speaking the bridge wire protocol.

    The dimension comes from ``GET /health`` at construction time, so a
    mid-run dimension change is caught as a protocol error.
    """

    name = "bridge"

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        try:
            response = requests.get(self.endpoint + "/health", timeout=timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise BridgeUnreachable(f"cannot reach bridge at {self.endpoint}: {exc}") from exc
        if response.status_code != 200:
            raise BridgeProtocolError(f"health check returned HTTP {response.status_code}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise BridgeProtocolError("health response is not JSON") from exc
        if payload.get("status") != "ok" or not isinstance(payload.get("dim"), int):
            raise BridgeProtocolError(f"unexpected health payload: {payload!r}")
        self.dim: int = payload["dim"]
        self.model: str = str(payload.get("model", ""))

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        nonempty = [(i, t) for i, t in enumerate(texts) if t.strip()]
        if not nonempty:
            return out
        vectors = embed_via_bridge([t for _, t in nonempty], self.endpoint, self.timeout)
        for (i, _), vec in zip(nonempty, vectors):
            if vec.dim != self.dim:
                raise DimensionMismatch(f"vector dim {vec.dim} != health dim {self.dim}")
            out[i] = vec.values
        return out
