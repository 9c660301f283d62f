"""Thin client for the service: in-process by default, or over HTTP."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import httpx


@dataclass
class Reply:
    status: int
    body: dict

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300

    def error_message(self) -> str:
        detail = self.body.get("detail", self.body)
        if isinstance(detail, list):  # pydantic validation errors
            return "; ".join(
                f"{'.'.join(str(p) for p in e.get('loc', [])[1:]) or 'request'}: {e.get('msg', '')}" for e in detail
            )
        return str(detail)


class ServiceClient:
    """POST JSON to an endpoint and return (status, body).

    With ``base_url`` None the app runs in-process through the ASGI test
    transport, so no server needs to be started.
    """

    def __init__(self, base_url: str | None = None, timeout: float = 3600.0):
        if base_url is None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service.app import app

            self._http = TestClient(app, raise_server_exceptions=False)
        else:
            self._http = httpx.Client(base_url=base_url, timeout=timeout)

    def post(self, path: str, payload: dict) -> Reply:
        resp = self._http.post(path, json=payload)
        try:
            body = resp.json()
        except ValueError:
            body = {"detail": resp.text}
        return Reply(resp.status_code, body)

    def close(self) -> None:
        self._http.close()
