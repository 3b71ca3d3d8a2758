"""Pre-transaction checks: URL provenance and duplicate-rating screening.

Both checks run before a rating transaction is built. They exist to give
users immediate, human-readable feedback; the ledger's no-op branch
remains the final authority, so a stale read here can never corrupt
state — at worst a no-op transaction gets mined.

The two user-facing messages are load-bearing strings consumed verbatim
by the API and UI layers; do not reword them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fnmatch import fnmatch
from importlib import resources
from pathlib import Path
from typing import Protocol
from urllib.parse import urlsplit, urlunsplit

import requests

from .ledger import LedgerState, is_valid_resource_id

__all__ = [
    "AlwaysExistsProbe",
    "DUPLICATE_RATING_MESSAGE",
    "DuplicateRatingError",
    "HttpProbe",
    "INVALID_RESOURCE_MESSAGE",
    "InvalidResourceError",
    "ProbeResult",
    "ProviderRegistry",
    "ResourceProbe",
    "canonicalize_url",
    "check_history",
    "load_registry",
    "validate_resource",
]

INVALID_RESOURCE_MESSAGE = "Invalid resource."
DUPLICATE_RATING_MESSAGE = "Multiple ratings for the same resource are not allowed."


class InvalidResourceError(Exception):
    def __init__(self, message: str = INVALID_RESOURCE_MESSAGE) -> None:
        super().__init__(message)


class DuplicateRatingError(Exception):
    def __init__(self, message: str = DUPLICATE_RATING_MESSAGE) -> None:
        super().__init__(message)


def canonicalize_url(raw_url: str) -> str:
    """Normalize a URL to its canonical rating identifier.

    Scheme and host are lowercased, the fragment is dropped, and a bare
    trailing slash (empty path) is removed; path and query are otherwise
    preserved. Raises InvalidResourceError for anything that is not an
    absolute http(s) URL with a host.
    """
    if not isinstance(raw_url, str) or not raw_url.strip():
        raise InvalidResourceError()
    try:
        parts = urlsplit(raw_url.strip())
        host = parts.hostname
    except ValueError:
        raise InvalidResourceError() from None
    scheme = parts.scheme.lower()
    if scheme not in ("http", "https") or not host:
        raise InvalidResourceError()
    if parts.username or parts.password:
        raise InvalidResourceError()     # embedded credentials are never a resource
    netloc = host if parts.port is None else f"{host}:{parts.port}"
    path = "" if parts.path == "/" else parts.path
    canonical = urlunsplit((scheme, netloc, path, parts.query, ""))
    if not is_valid_resource_id(canonical):
        raise InvalidResourceError()
    return canonical


class ProbeResult(Enum):
    EXISTS = "exists"
    MISSING = "missing"
    UNREACHABLE = "unreachable"


class ResourceProbe(Protocol):
    def probe(self, canonical_url: str) -> ProbeResult:
        ...


class AlwaysExistsProbe:
    """Probe stand-in for offline/dev runs."""

    def probe(self, canonical_url: str) -> ProbeResult:
        return ProbeResult.EXISTS


class HttpProbe:
    """Existence check via HTTP HEAD; anything but a success response fails."""

    def __init__(self, http=requests, timeout: float = 5.0) -> None:
        self.http = http
        self.timeout = timeout

    def probe(self, canonical_url: str) -> ProbeResult:
        try:
            response = self.http.head(canonical_url, timeout=self.timeout,
                                      allow_redirects=True)
        except requests.RequestException:
            return ProbeResult.UNREACHABLE
        if 200 <= response.status_code < 300:
            return ProbeResult.EXISTS
        return ProbeResult.MISSING


@dataclass(frozen=True)
class ProviderRegistry:
    """Accepted content hosts, grouped by provider, plus the probe switch."""

    providers: dict[str, tuple[str, ...]] = field(default_factory=dict)
    probe_enabled: bool = True

    def __post_init__(self) -> None:
        for name, patterns in self.providers.items():
            if name != name.lower():
                raise ValueError(f"provider names must be lowercase: {name!r}")
            if not patterns:
                raise ValueError(f"provider {name!r} needs at least one "
                                 "host pattern")

    def provider_for(self, host: str) -> str | None:
        host = host.lower()
        for name, patterns in self.providers.items():
            if any(fnmatch(host, pattern.lower()) for pattern in patterns):
                return name
        return None


def load_registry(path: str | Path | None = None) -> ProviderRegistry:
    """Read {"probe_enabled": bool, "providers": {name: [host patterns]}}."""
    if path is None:
        text = resources.files("ratechain").joinpath(
            "data/providers_default.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text)
    return ProviderRegistry(
        providers={name: tuple(patterns)
                   for name, patterns in data["providers"].items()},
        probe_enabled=bool(data.get("probe_enabled", True)),
    )


def validate_resource(
    registry: ProviderRegistry,
    raw_url: str,
    probe: ResourceProbe | None = None,
) -> str:
    """Canonicalize and vet a URL; the canonical ResourceId or InvalidResource.

    A URL passes when it parses, its host belongs to a registered
    provider, and — with probing enabled — the probe confirms it exists.
    Unreachable probes fail closed.
    """
    canonical = canonicalize_url(raw_url)
    host = urlsplit(canonical).hostname or ""
    if registry.provider_for(host) is None:
        raise InvalidResourceError()
    if registry.probe_enabled:
        if probe is None or probe.probe(canonical) is not ProbeResult.EXISTS:
            raise InvalidResourceError()
    return canonical


def check_history(state: LedgerState, user: str, res: str, vote: bool) -> None:
    """Reject a same-vote repeat before it becomes a transaction.

    Denies exactly the triples the ledger would treat as a no-op: the user
    has rated this resource and their recorded vote equals the new one.
    Flips pass.
    """
    if state.has_rated(user, res) and state.current_vote(user, res) == vote:
        raise DuplicateRatingError()
