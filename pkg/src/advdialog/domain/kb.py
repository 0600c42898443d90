"""Knowledge base of bookable showings and the seeded world generator."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .frames import UserGoal
from .ontology import ANYTHING, TICKET, Ontology, load_ontology

KB_HEADER = "advdialog-kb v1"
GOALS_HEADER = "advdialog-goals v1"
DEFAULT_N_GOALS = 128

# attributes fixed per movie, per theater, or drawn per showing
MOVIE_ATTRS = ("genre", "actor", "director", "mpaa_rating", "duration", "description", "critic_rating", "language")
THEATER_ATTRS = ("city", "state", "zip", "theater_chain", "parking", "neighborhood",
                 "distanceconstraints", "accessibility", "seating", "audio")
STATE_OF_CITY = {"seattle": "wa", "bellevue": "wa", "portland": "or", "san francisco": "ca"}

# goal sampling: probability that each slot is a constraint, and the pool of showing-level extras
CORE_CONSTRAINT_PROB = {"moviename": 0.9, "date": 0.8, "starttime": 0.6, "city": 0.5,
                        "theater": 0.3, "numberofpeople": 0.7}
EXTRA_CONSTRAINTS = ("video_format", "price", "screen", "subtitles")
EXTRA_PROB = 0.8
VARIANTS_PER_SHOWING = (6, 12)
REQUEST_POOL = ("theater", "starttime", "price", "critic_rating", "video_format", "mpaa_rating", "screen")


class KnowledgeBase:
    """Rows are complete assignments over the ontology's attribute slots.

    Values are stored as integer codes per column so that constraint
    filtering is a vectorized mask.
    """

    def __init__(self, ontology: Ontology, rows: Sequence[Mapping[str, str]]):
        self.ontology = ontology
        self.columns = ontology.attribute_slots
        self._col = {s: i for i, s in enumerate(self.columns)}
        self._codes = {s: {v: i for i, v in enumerate(ontology.value_domain[s])} for s in self.columns}
        seen = set()
        kept = []
        for r in rows:
            key = tuple(r[s] for s in self.columns)
            for s, v in zip(self.columns, key):
                if v not in self._codes[s]:
                    raise ValueError(f"KB value {v!r} not in domain of slot {s!r}")
            if key not in seen:
                seen.add(key)
                kept.append(key)
        self._rows = kept
        self.codes = np.array(
            [[self._codes[s][v] for s, v in zip(self.columns, key)] for key in kept], dtype=np.int64
        ).reshape(len(kept), len(self.columns))

    def __len__(self):
        return len(self._rows)

    def row(self, i: int) -> dict[str, str]:
        return dict(zip(self.columns, self._rows[i]))

    @property
    def rows(self) -> list[dict[str, str]]:
        return [self.row(i) for i in range(len(self))]

    def match_mask(self, constraints: Mapping[str, str]) -> np.ndarray:
        mask = np.ones(len(self), dtype=bool)
        for slot, value in constraints.items():
            if slot not in self._col:
                raise ValueError(f"unknown KB slot {slot!r}")
            if value == ANYTHING:
                continue
            code = self._codes[slot].get(value)
            if code is None:
                mask[:] = False
                continue
            mask &= self.codes[:, self._col[slot]] == code
        return mask

    def match_indices(self, constraints: Mapping[str, str]) -> np.ndarray:
        return np.flatnonzero(self.match_mask(constraints))

    def satisfies(self, i: int, constraints: Mapping[str, str]) -> bool:
        row = self._rows[i]
        for slot, value in constraints.items():
            if slot in self._col and value != ANYTHING and row[self._col[slot]] != value:
                return False
        return True

    def __eq__(self, other):
        return isinstance(other, KnowledgeBase) and self.columns == other.columns and self._rows == other._rows

    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(KB_HEADER + "\n")
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self._rows)
        return buf.getvalue()


def kb_query(kb: KnowledgeBase, constraints: Mapping[str, str]) -> list[dict[str, str]]:
    """Rows matching every constraint, in KB order; ``"anything"`` matches all values."""
    return [kb.row(i) for i in kb.match_indices(constraints)]


def save_kb(kb: KnowledgeBase, path: str | Path) -> None:
    Path(path).write_text(kb.dumps(), encoding="utf-8")


def load_kb(path: str | Path, ontology: Ontology) -> KnowledgeBase:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines or lines[0].strip() != KB_HEADER:
        raise ValueError(f"{path}: line 1: missing header {KB_HEADER!r}")
    reader = csv.reader(lines[1:], delimiter="\t")
    columns = next(reader)
    if tuple(columns) != ontology.attribute_slots:
        raise ValueError(f"{path}: line 2: KB columns do not match the ontology")
    rows = []
    for lineno, rec in enumerate(reader, start=3):
        if len(rec) != len(columns):
            raise ValueError(f"{path}: line {lineno}: expected {len(columns)} fields, got {len(rec)}")
        rows.append(dict(zip(columns, rec)))
    return KnowledgeBase(ontology, rows)


def save_goals(goals: Sequence[UserGoal], path: str | Path) -> None:
    lines = [GOALS_HEADER] + [json.dumps(g.to_dict(), sort_keys=True) for g in goals]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_goals(path: str | Path) -> list[UserGoal]:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines or lines[0].strip() != GOALS_HEADER:
        raise ValueError(f"{path}: line 1: missing header {GOALS_HEADER!r}")
    return [UserGoal.from_dict(json.loads(line)) for line in lines[1:] if line.strip()]


def _pick(rng: np.random.Generator, values: Sequence[str]) -> str:
    return values[int(rng.integers(len(values)))]


def _generate_rows(ontology: Ontology, rng: np.random.Generator, n_rows: int) -> list[dict[str, str]]:
    dom = ontology.value_domain
    movies = {m: {a: _pick(rng, dom[a]) for a in MOVIE_ATTRS} for m in dom["moviename"]}
    cities = dom["city"]
    theaters = {}
    for j, t in enumerate(dom["theater"]):
        city = cities[j % len(cities)]
        attrs = {a: _pick(rng, dom[a]) for a in THEATER_ATTRS}
        attrs["city"] = city
        attrs["state"] = STATE_OF_CITY.get(city, attrs["state"])
        theaters[t] = attrs
    showing_level = ("date", "starttime")
    variant_level = [s for s in ontology.attribute_slots
                     if s not in MOVIE_ATTRS + THEATER_ATTRS + showing_level + ("moviename", "theater")]
    rows, seen = [], set()
    attempts = 0
    while len(rows) < n_rows:
        attempts += 1
        if attempts > 100 * n_rows + 1000:
            raise ValueError(f"could not generate {n_rows} distinct rows")
        m, t = _pick(rng, dom["moviename"]), _pick(rng, dom["theater"])
        base = {"moviename": m, "theater": t, **movies[m], **theaters[t]}
        for s in showing_level:
            base[s] = _pick(rng, dom[s])
        # one showing is sold in several variants (format, price, party size, ...)
        for _ in range(int(rng.integers(VARIANTS_PER_SHOWING[0], VARIANTS_PER_SHOWING[1] + 1))):
            if len(rows) == n_rows:
                break
            row = dict(base)
            for s in variant_level:
                row[s] = _pick(rng, dom[s])
            key = tuple(row[s] for s in ontology.attribute_slots)
            if key in seen:
                continue
            seen.add(key)
            rows.append(row)
    return rows


def _generate_goal(ontology: Ontology, rng: np.random.Generator, row: Mapping[str, str]) -> UserGoal:
    informs = {s: row[s] for s, p in CORE_CONSTRAINT_PROB.items() if rng.random() < p}
    if rng.random() < EXTRA_PROB:
        n_extra = 2 if rng.random() < 0.3 else 1
        for k in rng.choice(len(EXTRA_CONSTRAINTS), size=n_extra, replace=False):
            informs[EXTRA_CONSTRAINTS[k]] = row[EXTRA_CONSTRAINTS[k]]
    if not informs:
        informs["moviename"] = row["moviename"]
    requests = {TICKET}
    pool = [s for s in REQUEST_POOL if s not in informs]
    n_req = int(rng.random() < 0.7) + int(rng.random() < 0.2)
    for k in rng.choice(len(pool), size=min(n_req, len(pool)), replace=False):
        requests.add(pool[k])
    order = {s: i for i, s in enumerate(ontology.slots)}
    informs = dict(sorted(informs.items(), key=lambda kv: order[kv[0]]))
    return UserGoal(informs, frozenset(requests))


def generate_world(
    seed: int,
    n_rows: int = 300,
    n_goals: int = DEFAULT_N_GOALS,
    ontology: Ontology | None = None,
) -> tuple[KnowledgeBase, list[UserGoal]]:
    """Deterministic synthetic KB plus a goal corpus; every goal is satisfiable by its source row."""
    if n_rows < 1:
        raise ValueError("n_rows must be >= 1")
    if n_goals < 1:
        raise ValueError("n_goals must be >= 1")
    ontology = ontology or load_ontology()
    rng = np.random.default_rng(seed)
    kb = KnowledgeBase(ontology, _generate_rows(ontology, rng, n_rows))
    goals = [_generate_goal(ontology, rng, kb.row(int(rng.integers(len(kb))))) for _ in range(n_goals)]
    return kb, goals
