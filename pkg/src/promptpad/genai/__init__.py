from .context import (
    BUNDLE_CAP,
    ContextBundle,
    TRUNCATION_MARKER,
    assemble_context,
    expand_identifier,
    tracked_identifier,
)
from .oracle import (
    ADD,
    EDIT,
    EXPLAIN,
    GenRequest,
    GenResult,
    LINK_CHECK,
    LiveConfig,
    LiveOracle,
    MalformedOutput,
    MockOracle,
    OracleUnavailable,
    REQUEST_CHECK,
    extract_live_output,
    first_line,
    load_template,
    make_oracle,
    mock_code_for_prompt,
    render_template,
    token_substitute,
)

__all__ = [
    "ADD",
    "BUNDLE_CAP",
    "ContextBundle",
    "EDIT",
    "EXPLAIN",
    "GenRequest",
    "GenResult",
    "LINK_CHECK",
    "LiveConfig",
    "LiveOracle",
    "MalformedOutput",
    "MockOracle",
    "OracleUnavailable",
    "REQUEST_CHECK",
    "TRUNCATION_MARKER",
    "assemble_context",
    "expand_identifier",
    "extract_live_output",
    "first_line",
    "load_template",
    "make_oracle",
    "mock_code_for_prompt",
    "render_template",
    "token_substitute",
    "tracked_identifier",
]
