from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_texts():
    texts = {p.stem: p.read_text(encoding="utf-8")
             for p in sorted(FIXTURES.glob("*.catb"))}
    from catbound.dsl import prelude_path
    texts["prelude"] = prelude_path().read_text(encoding="utf-8")
    return texts
