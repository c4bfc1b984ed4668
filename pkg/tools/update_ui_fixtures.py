"""Regenerate the shared UI-fidelity fixtures from the canonical script."""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "tests"))

from test_ui_fidelity import FIXTURES, GESTURES, expected_trace  # noqa: E402


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / "scenario_gestures.json").write_text(
        json.dumps(GESTURES, indent=2) + "\n"
    )
    (FIXTURES / "expected_trace.json").write_text(
        json.dumps(expected_trace(), indent=2) + "\n"
    )
    print(f"wrote fixtures under {FIXTURES}")


if __name__ == "__main__":
    main()
