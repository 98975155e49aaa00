from pathlib import Path

import hypothesis
import pytest

from ecsea.log import ColumnMap, Event, Trace, parse_csv
from ecsea.trainer import pair_logs, train

hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.register_profile("fast", max_examples=20, deadline=None)
hypothesis.settings.load_profile("default")

DATA = Path(__file__).parent / "data"

LL_COLUMNS = ColumnMap("C_ID", "EVENT_NAME", "EVENT_TS", ("ID", "USER_UUID", "ITEM_UUID"))
HL_COLUMNS = ColumnMap("C_ID", "ACTIVITY", "TIMESTAMP", ("ID", "USER_UUID"))
USER = ("USER_UUID",)
TAU = 5_000

# model learned from the running example; the shared LL label follows the reverse of hlc
EXPECTED_HLC = {
    "gws.filelibrary.file.created": {
        ("file.file.created", "file.collection.file.added", "files.file.notification.set"): 1},
    "gws.wiki.created": {("wiki.page.created", "wiki.page.follow"): 1},
    "gws.wiki.wikiarticle.tag.created": {("wiki.page.updated", "wiki.page.tag.added"): 1},
    "gws.wiki.wikiarticle.updated": {("wiki.page.updated",): 1},
}
EXPECTED_LLC = {
    "file.file.created": {"gws.filelibrary.file.created"},
    "file.collection.file.added": {"gws.filelibrary.file.created"},
    "files.file.notification.set": {"gws.filelibrary.file.created"},
    "wiki.page.created": {"gws.wiki.created"},
    "wiki.page.follow": {"gws.wiki.created"},
    "wiki.page.tag.added": {"gws.wiki.wikiarticle.tag.created"},
    "wiki.page.updated": {"gws.wiki.wikiarticle.tag.created", "gws.wiki.wikiarticle.updated"},
}
TABLE2_ACTIVITIES = (
    "gws.filelibrary.file.created",
    "gws.wiki.created",
    "gws.wiki.wikiarticle.tag.created",
    "gws.wiki.wikiarticle.updated",
)

_acceptance_lines: list[str] = []


@pytest.fixture(scope="session")
def ll_log():
    return parse_csv((DATA / "table1_ll.csv").read_bytes(), LL_COLUMNS)


@pytest.fixture(scope="session")
def hl_log():
    return parse_csv((DATA / "table2_hl.csv").read_bytes(), HL_COLUMNS)


@pytest.fixture(scope="session")
def running_pair(ll_log, hl_log):
    return pair_logs(ll_log, hl_log).pairs[0]


@pytest.fixture
def running_model(running_pair):
    return train([running_pair], TAU, USER)


@pytest.fixture
def criterion():
    """Record a one-line PASS/FAIL verdict for the terminal summary."""
    def record(name: str, ok: bool, detail: str = ""):
        _acceptance_lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def ev(activity, t, user="u", case="c", **attrs):
    """Shorthand event with a USER_UUID attribute."""
    return Event(activity, t, case, {"USER_UUID": user, **attrs})


def trace(*events, case="c"):
    return Trace.from_events(case, [Event(e.activity, e.timestamp, case, e.attributes, i)
                                    for i, e in enumerate(events)])
