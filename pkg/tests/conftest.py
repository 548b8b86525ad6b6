import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from procmine.log import Event, EventLog  # noqa: E402

DAY = 86_400_000
HOUR = 3_600_000

activity_names = st.sampled_from(["A", "B", "C", "D", "Submit, form", 'say "hi"', "Ré-submit"])
resource_names = st.one_of(st.none(), st.sampled_from(["Applicant", "Hiring Manager", "Security Officer", "x,y"]))


@st.composite
def event_logs(draw, max_cases=8, max_events=10, max_ts=3 * DAY):
    """Random logs with ties, repeats and optional resources."""
    n_cases = draw(st.integers(0, max_cases))
    events = []
    for c in range(n_cases):
        for _ in range(draw(st.integers(1, max_events))):
            events.append(
                Event(
                    f"case{c}",
                    draw(activity_names),
                    draw(st.integers(0, max_ts)),
                    draw(resource_names),
                    {},
                    seq=len(events),
                )
            )
    order = draw(st.permutations(range(len(events))))
    return EventLog.from_events([events[i] for i in order])


@pytest.fixture
def ts():
    """ISO string -> epoch ms."""
    from procmine.log import parse_iso

    return parse_iso


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
