"""Brain backends: a deterministic stub for offline play and testing, and a
chat-completion HTTP endpoint for real models."""

from __future__ import annotations

import json
import os
import time
import urllib.error
import urllib.request

from arena_client.prompts import first_legal, render_messages, template_for

STUB_POLICIES = (
    "tit_for_tat",
    "always_cooperate",
    "always_defect",
    "grim_trigger",
    "first_legal",
)


def _matrix_history(view: dict) -> list:
    me = view["player"]
    return [(pair[me], pair[1 - me]) for pair in view.get("history", [])]


def _stub_action(policy: str, view: dict):
    kind = view["legal"]["kind"]
    if kind == "binary" and policy != "first_legal":
        cooperate, betray = view["legal"]["actions"]
        seen = _matrix_history(view)
        if policy == "always_cooperate":
            return cooperate
        if policy == "always_defect":
            return betray
        if policy == "tit_for_tat":
            return seen[-1][1] if seen else cooperate
        if policy == "grim_trigger":
            return betray if any(opp == betray for _, opp in seen) else cooperate
    return first_legal(view)


class StubPolicy:
    """Offline brain: decides from the structured view, then phrases the
    decision as model-ish text so the real extraction path still runs."""

    def __init__(self, policy: str):
        if policy not in STUB_POLICIES:
            raise ValueError(f"unknown stub policy {policy!r}; pick from {STUB_POLICIES}")
        self.policy = policy

    def complete(self, prompt: str, view: dict, deadline_s: float) -> str:
        del prompt, deadline_s
        action = _stub_action(self.policy, view)
        if view["legal"]["kind"] == "describe":
            return str(action)
        return f"I will go with {action}."


class HttpChatEndpoint:
    """Chat-completion endpoint (OpenAI-style request/response shape).

    The auth token comes from an environment variable only; transient
    failures retry up to twice within the move deadline.
    """

    def __init__(
        self,
        base_url: str,
        model: str = "",
        token_env: str = "ARENA_CLIENT_TOKEN",
        timeout_s: float = 20.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.token_env = token_env
        self.timeout_s = timeout_s

    def complete(self, prompt: str, view: dict, deadline_s: float) -> str:
        del prompt
        messages = render_messages(template_for(view["game"]), view)
        body = json.dumps({"model": self.model, "messages": messages}).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        stop_at = time.monotonic() + deadline_s
        last_error: Exception | None = None
        for attempt in range(3):  # one try plus two retries
            budget = stop_at - time.monotonic()
            if budget <= 0:
                break
            request = urllib.request.Request(
                f"{self.base_url}/chat/completions", data=body, headers=headers
            )
            try:
                with urllib.request.urlopen(
                    request, timeout=min(self.timeout_s, budget)
                ) as response:
                    payload = json.loads(response.read().decode("utf-8"))
                return payload["choices"][0]["message"]["content"]
            except (urllib.error.URLError, TimeoutError, KeyError, json.JSONDecodeError) as exc:
                last_error = exc
                time.sleep(min(0.2 * (attempt + 1), max(0.0, stop_at - time.monotonic())))
        raise RuntimeError(f"chat endpoint failed: {last_error}")


def build_backend(spec: str, model: str = "", timeout_s: float = 20.0):
    """Parse a --backend spec: stub:<policy> or http:<base-url>.

    Both `http://host/v1` and the prefixed `http:https://host/v1` work.
    """
    scheme, _, rest = spec.partition(":")
    if scheme == "stub":
        return StubPolicy(rest or "first_legal")
    if scheme in ("http", "https"):
        base = spec if rest.startswith("//") else rest
        return HttpChatEndpoint(base_url=base, model=model, timeout_s=timeout_s)
    raise ValueError(f"backend must be stub:<policy> or http:<url>, got {spec!r}")
