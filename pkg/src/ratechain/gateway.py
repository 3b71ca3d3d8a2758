"""HTTP front door: sign in, rate, and read back ratings over JSON.

Error bodies are always {"code", "message"}; the two validation messages
are returned byte-for-byte as the validation module defines them. No
response ever carries provider credentials or raw account ids — sessions
resolve to the hashed user_id before anything else happens.
"""

from __future__ import annotations

import os

import uvicorn
from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .identity import (
    AuthService,
    AuthSession,
    ExpiredSessionError,
    IdentityError,
    InvalidCredentialsError,
    UnknownProviderError,
    UnknownSessionError,
    build_stub_auth_service,
)
from .ledger import is_valid_user_id
from .node import RatingNode
from .validation import DuplicateRatingError, InvalidResourceError

__all__ = ["ApiError", "create_app", "run_gateway"]

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8334


class ApiError(Exception):
    """Carried to the client verbatim as {"code": ..., "message": ...}."""

    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class AuthRequest(BaseModel):
    provider: str
    credential: str


class RateRequest(BaseModel):
    url: str
    vote: bool


def create_app(node: RatingNode, auth: AuthService | None = None) -> FastAPI:
    auth_service = auth if auth is not None else build_stub_auth_service()
    app = FastAPI(title="ratechain gateway", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def require_session(authorization: str | None = Header(None)) -> AuthSession:
        if not authorization or not authorization.startswith("Bearer "):
            raise ApiError(401, "unauthorized", "Authentication required.")
        token = authorization.removeprefix("Bearer ").strip()
        try:
            return auth_service.resolve_session(token)
        except (UnknownSessionError, ExpiredSessionError):
            raise ApiError(401, "unauthorized",
                           "Invalid or expired session.") from None

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(InvalidResourceError)
    async def on_invalid_resource(request: Request,
                                  exc: InvalidResourceError) -> JSONResponse:
        return JSONResponse(status_code=400,
                            content={"code": "invalid_resource",
                                     "message": str(exc)})

    @app.exception_handler(DuplicateRatingError)
    async def on_duplicate(request: Request,
                           exc: DuplicateRatingError) -> JSONResponse:
        return JSONResponse(status_code=409,
                            content={"code": "duplicate_rating",
                                     "message": str(exc)})

    @app.exception_handler(IdentityError)
    async def on_identity_error(request: Request,
                                exc: IdentityError) -> JSONResponse:
        if isinstance(exc, UnknownProviderError):
            return JSONResponse(status_code=400,
                                content={"code": "unknown_provider",
                                         "message": str(exc)})
        if isinstance(exc, InvalidCredentialsError):
            return JSONResponse(status_code=401,
                                content={"code": "unauthorized",
                                         "message": str(exc)})
        return JSONResponse(status_code=500,
                            content={"code": "internal", "message": str(exc)})

    @app.post("/auth")
    def post_auth(body: AuthRequest) -> dict:
        session = auth_service.authenticate(body.provider, body.credential)
        return {
            "session_token": session.session_token,
            "user_id": session.user_id,
            "provider": session.provider,
            "expires_at": session.expires_at,
        }

    @app.post("/rate", status_code=202)
    def post_rate(
        body: RateRequest,
        estimate: bool = Query(False),
        session: AuthSession = Depends(require_session),
    ):
        result = node.rate(session.user_id, body.url, body.vote,
                           estimate=estimate)
        if estimate:
            return JSONResponse(status_code=200,
                                content={"estimate": True, **result.to_dict()})
        return result.to_dict()

    @app.get("/resources")
    def get_resources() -> list[dict]:
        return node.resources_table()

    @app.get("/resources/{resource_id:path}")
    def get_resource(resource_id: str) -> dict:
        # unknown resources read as (0, 0): map-default semantics
        return node.resource_rating(resource_id)

    @app.get("/history/{user_id}")
    def get_history(user_id: str):
        if not is_valid_user_id(user_id):
            raise ApiError(404, "not_found", "Unknown user id.")
        return node.user_history(user_id)

    @app.get("/chain")
    def get_chain(limit: int | None = Query(None, ge=1),
                  offset: int = Query(0, ge=0)) -> dict:
        return {
            "height": node.chain.height,
            "head": node.chain.head_hash(),
            "state_digest": node.state_digest_hex(),
            "blocks": node.chain_summary(limit=limit, offset=offset),
        }

    @app.post("/admin/mine")
    def post_mine() -> dict:
        return {"block": node.mine()}

    return app


def run_gateway(node: RatingNode, auth: AuthService | None = None,
                host: str | None = None, port: int | None = None) -> None:
    """Serve until interrupted; listen address falls back to the environment."""
    app = create_app(node, auth)
    uvicorn.run(
        app,
        host=host or os.environ.get("RATECHAIN_HOST", DEFAULT_HOST),
        port=int(port or os.environ.get("RATECHAIN_PORT", DEFAULT_PORT)),
        log_level="warning",
    )
