import json
from datetime import datetime, timezone
from pathlib import Path

import pytest

from evolog import corpus

DATA_DIR = Path(__file__).parent / "data"


def utc(*args) -> datetime:
    return datetime(*args, tzinfo=timezone.utc)


def make_review(rid="r1", app_id="app", body="text", created=None, **kw) -> corpus.Review:
    return corpus.Review(
        review_id=rid, app_id=app_id, body=body,
        created_at=created or utc(2021, 1, 1), **kw,
    )


def make_entry(eid="e1", app_id="app", version="1.0", released=None, text="entry text",
               **kw) -> corpus.UpdateLogEntry:
    return corpus.UpdateLogEntry(
        entry_id=eid, app_id=app_id, version=version,
        released_at=released or utc(2021, 1, 1), text=text, **kw,
    )


@pytest.fixture(scope="session")
def reference_counts() -> dict:
    return json.loads((DATA_DIR / "reference_counts.json").read_text())


@pytest.fixture
def default_rules() -> corpus.NormalizationRules:
    return corpus.NormalizationRules()
