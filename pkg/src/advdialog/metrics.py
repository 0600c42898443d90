"""Learning-curve rows and the metrics CSV."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import Iterable

HEADER = ("episode", "success_rate", "avg_reward", "avg_turns", "seed", "agent")


@dataclass(frozen=True)
class MetricsRow:
    episode: int
    success_rate: float  # percent
    avg_reward: float
    avg_turns: float
    seed: int
    agent: str


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def dumps(rows: Iterable[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow([_fmt(v) for v in astuple(r)])
    return buf.getvalue()


def loads(text: str) -> list[MetricsRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != HEADER:
        raise ValueError(f"metrics CSV header must be {','.join(HEADER)}")
    return [MetricsRow(int(e), float(s), float(r), float(t), int(sd), a) for e, s, r, t, sd, a in reader]


def write_csv(rows: Iterable[MetricsRow], path: str | Path) -> None:
    Path(path).write_text(dumps(rows), encoding="utf-8")


def append_csv(rows: Iterable[MetricsRow], path: str | Path) -> None:
    path = Path(path)
    if not path.exists():
        write_csv(rows, path)
        return
    body = dumps(rows).split("\n", 1)[1]
    with path.open("a", encoding="utf-8") as fh:
        fh.write(body)


def read_csv(path: str | Path) -> list[MetricsRow]:
    return loads(Path(path).read_text("utf-8"))


def area_under_curve(rows: Iterable[MetricsRow]) -> float:
    """Trapezoidal area under success rate vs. episode."""
    pts = sorted((r.episode, r.success_rate) for r in rows)
    if len(pts) < 2:
        return 0.0
    return float(sum((x1 - x0) * (y0 + y1) / 2.0 for (x0, y0), (x1, y1) in zip(pts, pts[1:])))
