"""Generation oracles: the deterministic mock and the live HTTP adapter.

The mock is the shipped test oracle. Its rules are published and frozen —
tests derive expected values from these rules independently:

* code for a prompt: every non-empty prompt line L becomes two code lines,
  ``# L`` and ``result = f(x)`` where f is the line's second word and x its
  last word (single-word lines become ``result = w()``), both sanitized to
  identifier characters.
* edit with a substitution directive [old, new]: old is replaced at token
  boundaries in the prompt, then code is re-derived from the new prompt.
* edit with a shared directive: code gains a trailing ``# shared: <line>``.
* edit with a fulfilled directive {placeholder, value}: the placeholder
  text is replaced by value in the prompt (appended as ``using value`` when
  the placeholder is absent), then code is re-derived.
* any referenced material adds ``# ref: <first line>`` code trailers, in
  link-creation order.
* link check: change needed iff the two tracked identifiers differ.
* request check: satisfied iff every word of the request message occurs in
  the target prompt (case-insensitive); an empty message is satisfied iff
  the target block has non-empty code.
* explain: ``# L`` comment lines map the following run of code lines back
  to prompt line L; code lines before the first marker are unmapped.

The mock is a pure function of (templateKind, bundle); its cache is keyed
on exactly that, so identical inputs give identical outputs on every
replica.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..ops import canonical_json
from .context import ContextBundle

ADD = "add"
EDIT = "edit"
LINK_CHECK = "link_check"
REQUEST_CHECK = "request_check"
EXPLAIN = "explain"
TEMPLATE_KINDS = (ADD, EDIT, LINK_CHECK, REQUEST_CHECK, EXPLAIN)

_TEMPLATE_DIR = Path(__file__).parent / "templates"


class OracleUnavailable(Exception):
    pass


class MalformedOutput(Exception):
    pass


@dataclass(frozen=True)
class GenRequest:
    template_kind: str
    target_block_id: str
    bundle: ContextBundle
    expected: str | None = None
    attempt: int = 0


@dataclass(frozen=True)
class GenResult:
    kind: str  # prompt-and-code | code-only | verdict | explanation
    prompt_text: str = ""
    code_text: str = ""
    verdict: bool | None = None
    rationale: str = ""
    steps: tuple = ()
    span_map: tuple = ()  # ((prompt_start, prompt_end), (line_start, line_end))
    unmapped: tuple = ()
    oracle_id: str = "mock"
    latency_ms: int = 0


def _ident(word: str) -> str:
    out = "".join(c if (c.isalnum() or c == "_") else "" for c in word.lower())
    return out or "x"


def mock_code_for_prompt(prompt_text: str) -> str:
    lines = []
    for raw in prompt_text.split("\n"):
        line = raw.strip()
        if not line:
            continue
        words = line.split()
        lines.append(f"# {line}")
        if len(words) >= 2:
            lines.append(f"result = {_ident(words[1])}({_ident(words[-1])})")
        else:
            lines.append(f"result = {_ident(words[0])}()")
    return "\n".join(lines)


def token_substitute(text: str, old: str, new: str) -> str:
    if not old:
        return text
    pattern = rf"(?<![A-Za-z0-9_]){re.escape(old)}(?![A-Za-z0-9_])"
    return re.sub(pattern, new, text)


def first_line(text: str) -> str:
    return text.split("\n", 1)[0].strip()


class MockOracle:
    """Deterministic oracle; the published rules above are its contract."""

    oracle_id = "mock"

    def __init__(self):
        self.cache: dict[str, GenResult] = {}
        self.writes = 0
        self.calls = 0
        # deterministic failure injection for retry-path tests:
        # bundle-digest prefix -> remaining failures
        self.fail_budget: dict[str, int] = {}

    def fingerprint(self) -> tuple[int, int, tuple]:
        return (len(self.cache), self.writes, tuple(sorted(self.cache)))

    def generate(self, req: GenRequest) -> GenResult:
        self.calls += 1
        if self.fail_budget.get(req.template_kind, 0) > 0:
            self.fail_budget[req.template_kind] -= 1
            raise OracleUnavailable(f"injected failure for {req.template_kind}")
        key = f"{req.template_kind}:{req.bundle.digest()}"
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        result = self._rules(req)
        self.cache[key] = result
        self.writes += 1
        return result

    def _rules(self, req: GenRequest) -> GenResult:
        bundle = req.bundle
        kind = req.template_kind
        directive = {}
        raw = bundle.get("directive")
        if raw:
            import json

            directive = json.loads(raw)

        if kind == LINK_CHECK:
            src = directive.get("sourceIdent", "")
            tgt = directive.get("targetIdent", "")
            if src == tgt:
                return GenResult(kind="verdict", verdict=False, rationale="identifiers match")
            return GenResult(
                kind="verdict", verdict=True,
                rationale=f"identifier changed: {tgt} -> {src}",
            )

        if kind == REQUEST_CHECK:
            message = bundle.get("message")
            prompt = bundle.get("prompt")
            code = bundle.get("code")
            words = [w for w in re.findall(r"[A-Za-z0-9_]+", message.lower())]
            if not words:
                ok = bool(code.strip())
                return GenResult(kind="verdict", verdict=ok,
                                 rationale="code present" if ok else "no code yet")
            hay = set(re.findall(r"[A-Za-z0-9_]+", prompt.lower()))
            missing = [w for w in words if w not in hay]
            if missing:
                return GenResult(kind="verdict", verdict=False,
                                 rationale=f"missing: {' '.join(missing)}")
            return GenResult(kind="verdict", verdict=True, rationale="all keywords present")

        if kind == EXPLAIN:
            return self._explain(bundle)

        # add / edit
        prompt = bundle.get("prompt")
        if kind == EDIT:
            sub = directive.get("substitute")
            if sub:
                prompt = token_substitute(prompt, sub[0], sub[1])
            ful = directive.get("fulfilled")
            if ful:
                placeholder, value = ful.get("placeholder", ""), ful.get("value", "")
                if placeholder and placeholder in prompt:
                    prompt = prompt.replace(placeholder, value)
                elif value:
                    prompt = prompt + ("\n" if prompt else "") + f"using {value}"
        code = mock_code_for_prompt(prompt)
        trailers = []
        for name, text in bundle.refs():
            if text:
                trailers.append(f"# ref: {first_line(text)}")
        shared = directive.get("shared")
        if shared:
            trailers.append(f"# shared: {first_line(shared)}")
        if trailers:
            code = code + ("\n" if code else "") + "\n".join(trailers)
        return GenResult(kind="prompt-and-code", prompt_text=prompt, code_text=code)

    def _explain(self, bundle: ContextBundle) -> GenResult:
        prompt = bundle.get("prompt")
        code = bundle.get("code")
        if not code.strip():
            return GenResult(kind="explanation", steps=(), span_map=(), unmapped=())
        prompt_lines = prompt.split("\n")
        # char span of each prompt line
        spans = []
        at = 0
        for pl in prompt_lines:
            spans.append((at, at + len(pl)))
            at += len(pl) + 1
        code_lines = code.split("\n")
        pairs = []
        unmapped = []
        current = None  # (prompt_span, start_line)
        for i, cl in enumerate(code_lines):
            m = cl.strip()
            matched = None
            if m.startswith("# "):
                needle = m[2:].strip()
                for j, pl in enumerate(prompt_lines):
                    if pl.strip() == needle:
                        matched = j
                        break
            if matched is not None:
                if current is not None:
                    pairs.append((current[0], (current[1], i - 1)))
                current = (spans[matched], i)
            elif current is None:
                unmapped.append(i)
        if current is not None:
            pairs.append((current[0], (current[1], len(code_lines) - 1)))
        steps = tuple(pl.strip() for pl in prompt_lines if pl.strip())
        return GenResult(
            kind="explanation",
            steps=steps,
            span_map=tuple(pairs),
            unmapped=tuple(unmapped),
        )


def load_template(kind: str) -> str:
    return (_TEMPLATE_DIR / f"{kind}.txt").read_text(encoding="utf-8")


def render_template(kind: str, bundle: ContextBundle, expected: str | None = None) -> str:
    tpl = load_template(kind)
    refs = "\n\n".join(t for _, t in bundle.refs())
    return tpl.format(
        outline=bundle.get("outline"),
        prompt=bundle.get("prompt"),
        code=bundle.get("code"),
        references=refs,
        message=bundle.get("message"),
        directive=bundle.get("directive"),
        expected=expected or bundle.get("expected"),
    )


def extract_live_output(text: str) -> tuple[str, str]:
    """Parse a live completion: first fenced block is code, prose before it
    is the revised prompt. Anything else is malformed."""
    m = re.search(r"```[a-zA-Z0-9_-]*\n(.*?)```", text, re.DOTALL)
    if not m:
        raise MalformedOutput("no fenced code block in model output")
    code = m.group(1).rstrip("\n")
    prompt = text[: m.start()].strip()
    return prompt, code


@dataclass
class LiveConfig:
    url: str
    api_key: str = ""
    model: str = "gpt-4"
    timeout_s: float = 30.0

    @classmethod
    def from_env(cls, env=os.environ) -> "LiveConfig | None":
        url = env.get("PROMPTPAD_MODEL_URL")
        if not url or env.get("PROMPTPAD_ORACLE", "").lower() == "mock":
            return None
        return cls(
            url=url,
            api_key=env.get("PROMPTPAD_API_KEY", ""),
            model=env.get("PROMPTPAD_MODEL", "gpt-4"),
        )


class LiveOracle:
    """Thin adapter over an OpenAI-style chat endpoint.

    `max_concurrent` caps in-flight model calls per process (config
    gen_concurrency, default 2).
    """

    oracle_id = "live"

    def __init__(self, config: LiveConfig, transport=None, max_concurrent: int = 2):
        import threading

        self.config = config
        self._transport = transport
        self.cache: dict[str, GenResult] = {}
        self.writes = 0
        self._gate = threading.BoundedSemaphore(max(1, max_concurrent))

    def fingerprint(self):
        return (len(self.cache), self.writes, tuple(sorted(self.cache)))

    def _client(self):
        import httpx

        if self._transport is not None:
            return httpx.Client(transport=self._transport, timeout=self.config.timeout_s)
        return httpx.Client(timeout=self.config.timeout_s)

    def generate(self, req: GenRequest) -> GenResult:
        started = time.monotonic()
        rendered = render_template(req.template_kind, req.bundle, req.expected)
        body = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": rendered}],
        }
        try:
            with self._gate, self._client() as client:
                resp = client.post(
                    self.config.url,
                    json=body,
                    headers={"Authorization": f"Bearer {self.config.api_key}"},
                )
                resp.raise_for_status()
                data = resp.json()
        except MalformedOutput:
            raise
        except Exception as exc:
            raise OracleUnavailable(str(exc)) from exc
        text = data["choices"][0]["message"]["content"]
        latency = int((time.monotonic() - started) * 1000)
        if req.template_kind in (LINK_CHECK, REQUEST_CHECK):
            head = text.strip().split("\n", 1)[0].lower()
            verdict = "yes" in head or "true" in head
            return GenResult(kind="verdict", verdict=verdict, rationale=text.strip(),
                             oracle_id="live", latency_ms=latency)
        prompt, code = extract_live_output(text)
        return GenResult(kind="prompt-and-code", prompt_text=prompt, code_text=code,
                         oracle_id="live", latency_ms=latency)


def make_oracle(mode: str = "mock", env=os.environ, max_concurrent: int = 2):
    if mode == "live":
        cfg = LiveConfig.from_env(env)
        if cfg is None:
            raise OracleUnavailable("live oracle requested but PROMPTPAD_MODEL_URL unset")
        return LiveOracle(cfg, max_concurrent=max_concurrent)
    return MockOracle()
