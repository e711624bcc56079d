"""Request/response payloads for the session service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

SERVICE_SCHEMA_VERSION = 1


class SessionCreateRequest(BaseModel):
    """Start a tick loop for a scenario on the server's map.

    The scenario document follows the scenario file schema; any `map`
    section inside it is ignored because the service owns the map.
    """

    scenario: dict
    slim: bool = False


class SessionCreateResponse(BaseModel):
    schema_version: int = SERVICE_SCHEMA_VERSION
    session_id: str
    name: str
    mode: str
    tick_hz: float


class SessionDeleteResponse(BaseModel):
    schema_version: int = SERVICE_SCHEMA_VERSION
    session_id: str
    stopped: bool


class ErrorResponse(BaseModel):
    detail: str


class ControlMessage(BaseModel):
    """Inbound stream message: requested ego acceleration in m/s^2."""

    accel: float = Field(description="applied at the next tick boundary; latest wins")
