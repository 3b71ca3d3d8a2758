"""Provider-backed sign-in, session tokens, and identity hashing.

Users authenticate against an account provider (google, github, spotify,
or anything else registered). What leaves this module is a 32-hex UserId:
the md5 of "provider:account_id". Only that hash ever reaches transactions
or blocks, so chain inspection cannot recover who rated. md5 is not
collision resistant; it is kept here as the established identifier format
and the hasher is injectable for deployments that want something stronger.
"""

from __future__ import annotations

import hashlib
import json
import os
import secrets
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Protocol

import requests

__all__ = [
    "AuthService",
    "AuthSession",
    "DEFAULT_SESSION_TTL",
    "EmptyInputError",
    "ExpiredSessionError",
    "IdentityError",
    "InvalidCredentialsError",
    "ProviderConfig",
    "RemoteProviderClient",
    "SessionStore",
    "StubProviderClient",
    "UnknownProviderError",
    "UnknownSessionError",
    "build_live_auth_service",
    "build_stub_auth_service",
    "hash_identity",
    "load_stub_accounts",
]

DEFAULT_SESSION_TTL = 24 * 60 * 60      # seconds


class IdentityError(Exception):
    pass


class EmptyInputError(IdentityError):
    pass


class UnknownProviderError(IdentityError):
    pass


class InvalidCredentialsError(IdentityError):
    pass


class UnknownSessionError(IdentityError):
    pass


class ExpiredSessionError(IdentityError):
    pass


def hash_identity(provider: str, account_id: str) -> str:
    """Map (provider, account) to its stable anonymous 32-hex UserId.

    The preimage is "provider:account_id", so the same username on two
    providers yields two distinct identities.
    """
    if not provider or not account_id:
        raise EmptyInputError("provider and account_id must be non-empty")
    return hashlib.md5(f"{provider}:{account_id}".encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class AuthSession:
    session_token: str
    provider: str
    account_id: str
    user_id: str
    expires_at: int


class SessionStore:
    """In-memory token -> session map with TTL expiry; safe across threads."""

    def __init__(self, ttl_seconds: int = DEFAULT_SESSION_TTL,
                 clock: Callable[[], float] = time.time) -> None:
        if ttl_seconds <= 0:
            raise ValueError("ttl_seconds must be positive")
        self.ttl_seconds = ttl_seconds
        self._clock = clock
        self._lock = threading.Lock()
        self._sessions: dict[str, AuthSession] = {}

    def issue(self, provider: str, account_id: str, user_id: str) -> AuthSession:
        session = AuthSession(
            session_token=secrets.token_hex(16),    # 128 bits
            provider=provider,
            account_id=account_id,
            user_id=user_id,
            expires_at=int(self._clock()) + self.ttl_seconds,
        )
        with self._lock:
            self._sessions[session.session_token] = session
        return session

    def resolve(self, token: str) -> AuthSession:
        with self._lock:
            session = self._sessions.get(token)
            if session is None:
                raise UnknownSessionError("unknown session token")
            if self._clock() >= session.expires_at:
                del self._sessions[token]
                raise ExpiredSessionError("session has expired")
            return session

    def drop(self, token: str) -> None:
        with self._lock:
            self._sessions.pop(token, None)


class ProviderClient(Protocol):
    def verify(self, credential: str) -> str:
        """Exchange a credential for the provider-scoped account id."""
        ...


class StubProviderClient:
    """Fixture-backed verifier: a plain credential -> account_id table."""

    def __init__(self, accounts: dict[str, str]) -> None:
        self.accounts = dict(accounts)

    def verify(self, credential: str) -> str:
        try:
            return self.accounts[credential]
        except KeyError:
            raise InvalidCredentialsError("credential not recognised") from None


@dataclass(frozen=True)
class ProviderConfig:
    """Live-mode client settings, sourced from the environment."""

    name: str
    client_id: str
    client_secret: str
    callback_url: str
    userinfo_url: str
    account_field: str = "id"

    @classmethod
    def from_env(cls, name: str, env: dict[str, str] | None = None
                 ) -> "ProviderConfig | None":
        env = os.environ if env is None else env
        prefix = f"RATECHAIN_{name.upper()}_"
        values = {key: env.get(prefix + key.upper(), "")
                  for key in ("client_id", "client_secret", "callback_url",
                              "userinfo_url")}
        if not all(values.values()):
            return None
        return cls(name=name,
                   account_field=env.get(prefix + "ACCOUNT_FIELD", "id"),
                   **values)


class RemoteProviderClient:
    """Verifies a bearer credential against the provider's userinfo endpoint."""

    def __init__(self, config: ProviderConfig, http=requests) -> None:
        self.config = config
        self.http = http

    def verify(self, credential: str) -> str:
        try:
            response = self.http.get(
                self.config.userinfo_url,
                headers={"Authorization": f"Bearer {credential}"},
                timeout=10,
            )
        except requests.RequestException as exc:
            raise InvalidCredentialsError(f"provider unreachable: {exc}") from exc
        if response.status_code != 200:
            raise InvalidCredentialsError(
                f"provider rejected credential ({response.status_code})")
        account = response.json().get(self.config.account_field)
        if not account:
            raise InvalidCredentialsError("provider response lacks an account id")
        return str(account)


class AuthService:
    """Registered providers + session issuance; the only door to a UserId."""

    def __init__(
        self,
        providers: dict[str, ProviderClient],
        sessions: SessionStore | None = None,
        hasher: Callable[[str, str], str] = hash_identity,
    ) -> None:
        for name in providers:
            if name != name.lower():
                raise ValueError(f"provider names must be lowercase: {name!r}")
        self.providers = dict(providers)
        self.sessions = sessions if sessions is not None else SessionStore()
        self.hasher = hasher

    def authenticate(self, provider: str, credential: str) -> AuthSession:
        client = self.providers.get(provider)
        if client is None:
            raise UnknownProviderError(f"unknown provider: {provider!r}")
        account_id = client.verify(credential)
        user_id = self.hasher(provider, account_id)
        return self.sessions.issue(provider, account_id, user_id)

    def resolve_session(self, token: str) -> AuthSession:
        return self.sessions.resolve(token)


def load_stub_accounts(path: str | Path | None = None) -> dict[str, dict[str, str]]:
    """Read stub fixtures: {provider: {credential: account_id}}."""
    if path is None:
        text = resources.files("ratechain").joinpath(
            "data/stub_accounts_default.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text)
    if not isinstance(data, dict) or not all(
            isinstance(table, dict) for table in data.values()):
        raise ValueError("stub accounts file must map providers to "
                         "credential tables")
    return data


def build_stub_auth_service(
    path: str | Path | None = None,
    ttl_seconds: int = DEFAULT_SESSION_TTL,
    clock: Callable[[], float] = time.time,
) -> AuthService:
    accounts = load_stub_accounts(path)
    providers = {name: StubProviderClient(table)
                 for name, table in accounts.items()}
    return AuthService(providers, SessionStore(ttl_seconds, clock))


def build_live_auth_service(
    provider_names: list[str] | None = None,
    ttl_seconds: int = DEFAULT_SESSION_TTL,
    env: dict[str, str] | None = None,
) -> AuthService:
    """Wire RemoteProviderClients from RATECHAIN_<NAME>_* environment settings."""
    environ = os.environ if env is None else env
    if provider_names is None:
        raw = environ.get("RATECHAIN_PROVIDERS", "")
        provider_names = [p.strip() for p in raw.split(",") if p.strip()]
    providers: dict[str, ProviderClient] = {}
    for name in provider_names:
        config = ProviderConfig.from_env(name, environ)
        if config is None:
            raise UnknownProviderError(
                f"provider {name!r} is not fully configured in the environment")
        providers[name] = RemoteProviderClient(config)
    return AuthService(providers, SessionStore(ttl_seconds))
