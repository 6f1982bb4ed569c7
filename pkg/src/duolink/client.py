"""Thin HTTP client for the duolink service.

By default requests run against an in-process ASGI instance of the app, so
the CLI works standalone while still exercising the exact HTTP surface; pass
``base_url`` to talk to a remote service instead (paths in requests are then
resolved on the remote host).
"""

from __future__ import annotations

import asyncio

import httpx


class ServiceError(Exception):
    """A non-2xx service response, carrying the structured error code."""

    def __init__(self, code: str, message: str, http_status: int):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.http_status = http_status


def _raise_for_body(status_code: int, body) -> None:
    detail = body.get("detail") if isinstance(body, dict) else None
    if isinstance(detail, dict) and "code" in detail:
        raise ServiceError(detail["code"], detail.get("message", ""), status_code)
    # FastAPI's own 422 bodies carry a list of field errors
    raise ServiceError("validation_error" if status_code == 422 else "error",
                       str(detail if detail is not None else body), status_code)


class ServiceClient:
    """Synchronous facade over the JSON API."""

    def __init__(self, base_url: str | None = None, timeout: float | None = None):
        self.base_url = base_url
        self.timeout = timeout

    def _post(self, path: str, payload: dict) -> dict:
        if self.base_url is not None:
            with httpx.Client(base_url=self.base_url, timeout=self.timeout) as client:
                resp = client.post(path, json=payload)
            return self._unwrap(resp)
        return asyncio.run(self._post_asgi(path, payload))

    async def _post_asgi(self, path: str, payload: dict) -> dict:
        from .service.app import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://duolink", timeout=self.timeout
        ) as client:
            resp = await client.post(path, json=payload)
        return self._unwrap(resp)

    @staticmethod
    def _unwrap(resp: httpx.Response) -> dict:
        body = resp.json()
        if resp.status_code >= 400:
            _raise_for_body(resp.status_code, body)
        return body

    def gen(self, **payload) -> dict:
        return self._post("/gen", payload)

    def eval(self, **payload) -> dict:
        return self._post("/eval", payload)

    def sweep(self, **payload) -> dict:
        return self._post("/sweep", payload)

    def cdf(self, **payload) -> dict:
        return self._post("/cdf", payload)
