import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advdialog.domain import (
    ActionSpace,
    DialogueAct,
    DialogueTracker,
    KnowledgeBase,
    OntologyError,
    SemanticFrame,
    featurize,
    generate_world,
    kb_query,
    load_goals,
    load_kb,
    load_ontology,
    match_bucket,
    parse_frame,
    save_goals,
    save_kb,
    state_dim,
)
from advdialog.domain.frames import AGENT, USER, UserGoal
from advdialog.domain.ontology import N_ACTS, dump_ontology, parse_ontology


def test_default_ontology_shape(ontology):
    assert ontology.n_slots == 29
    assert N_ACTS == 11
    assert sorted(a.index for a in DialogueAct) == list(range(11))
    assert ontology.informable | ontology.requestable == set(ontology.slots)
    assert state_dim(ontology) == 145


def test_ontology_file_errors(tmp_path):
    with pytest.raises(OntologyError, match="empty ontology"):
        parse_ontology(["advdialog-ontology v1", "# nothing"], strict=False)
    dup = ["advdialog-ontology v1", "city | IR | a|b", "city | IR | c"]
    with pytest.raises(OntologyError, match="duplicate slot"):
        parse_ontology(dup, strict=False)
    with pytest.raises(OntologyError, match="line 2"):
        parse_ontology(["advdialog-ontology v1", "city IR a"], strict=False)
    with pytest.raises(OntologyError, match="expected 29"):
        parse_ontology(["advdialog-ontology v1", "city | IR | a"], strict=True)
    with pytest.raises(OntologyError, match="header"):
        parse_ontology(["city | IR | a"], strict=False)
    with pytest.raises(OntologyError, match="not found"):
        load_ontology(tmp_path / "missing.ontology")


def test_ontology_round_trip(ontology, tmp_path):
    p = tmp_path / "o.ontology"
    p.write_text(dump_ontology(ontology))
    again = load_ontology(p)
    assert again.slots == ontology.slots
    assert again.value_domain == ontology.value_domain


def test_action_space_is_a_bijection(ontology):
    actions = ActionSpace(ontology)
    keys = {(a.act, a.slot) for a in actions.actions}
    assert len(keys) == len(actions)
    for a in actions.actions:
        assert actions.index(a.act, a.slot) == a.index
    assert [a.index for a in actions.actions] == list(range(len(actions)))
    # 29 requests + 28 informs (taskcomplete is a special) + 6 specials
    assert len(actions) == 63


def test_generate_world_is_deterministic(ontology):
    kb1, g1 = generate_world(7, 100, ontology=ontology)
    kb2, g2 = generate_world(7, 100, ontology=ontology)
    assert kb1.dumps() == kb2.dumps()
    assert g1 == g2
    assert len(g1) == 128
    kb3, _ = generate_world(8, 100, ontology=ontology)
    assert kb3.dumps() != kb1.dumps()
    with pytest.raises(ValueError):
        generate_world(7, 0, ontology=ontology)


def test_generated_goals_are_satisfiable(world):
    kb, goals = world
    for g in goals:
        assert kb_query(kb, dict(g.inform_slots))
        assert "ticket" in g.request_slots


def test_kb_rows_complete_and_unique(world, ontology):
    kb, _ = world
    rows = [tuple(r[s] for s in kb.columns) for r in kb.rows]
    assert len(set(rows)) == len(rows)
    assert set(kb.columns) == set(ontology.attribute_slots)


def test_kb_query_hand_built(tiny_ontology):
    rows = [
        {"moviename": "a", "date": "tomorrow", "city": "x"},
        {"moviename": "b", "date": "today", "city": "x"},
        {"moviename": "c", "date": "tomorrow", "city": "y"},
    ]
    kb = KnowledgeBase(tiny_ontology, rows)
    assert kb_query(kb, {}) == rows
    assert kb_query(kb, {"date": "tomorrow"}) == [rows[0], rows[2]]
    assert kb_query(kb, {"date": "tomorrow", "moviename": "b"}) == []
    assert kb_query(kb, {"date": "anything"}) == rows
    with pytest.raises(ValueError, match="unknown"):
        kb_query(kb, {"genre": "comedy"})


def test_kb_and_goal_files_round_trip(world, ontology, tmp_path):
    kb, goals = world
    save_kb(kb, tmp_path / "kb.tsv")
    save_goals(goals, tmp_path / "goals.txt")
    assert load_kb(tmp_path / "kb.tsv", ontology) == kb
    assert load_goals(tmp_path / "goals.txt") == goals
    assert (tmp_path / "kb.tsv").read_text().startswith("advdialog-kb v1\n")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["moviename", "date", "starttime", "city", "genre", "video_format"]),
                unique=True, max_size=6), st.integers(0, 299))
def test_kb_query_monotone_in_constraints(world, slots, row_idx):
    kb, _ = world
    row = kb.row(row_idx)
    sizes = [len(kb_query(kb, {s: row[s] for s in slots[:k]})) for k in range(len(slots) + 1)]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))
    assert sizes[-1] >= 1


def test_match_bucket_edges():
    assert [match_bucket(c) for c in (0, 1, 2, 4, 5, 9, 10, 49, 50, 1000)] == [0, 1, 2, 2, 3, 3, 4, 4, 5, 5]


def test_featurize_initial_and_final_turn(ontology, world):
    kb, _ = world
    tr = DialogueTracker(ontology, kb)
    x = featurize(tr, kb_match_count=len(kb), turn=0, max_turns=40)
    assert x.shape == (145,)
    assert x[:11].sum() == 0 and x[69:80].sum() == 0
    assert x[138] == 0.0
    assert featurize(tr, 0, 40, 40)[138] == 1.0
    with pytest.raises(ValueError):
        featurize(tr, 0, 41, 40)


def test_featurize_scripted_dialogue(ontology, world):
    kb, _ = world
    tr = DialogueTracker(ontology, kb)
    idx = ontology.slot_index
    tr.update_user(SemanticFrame(DialogueAct.REQUEST, {"moviename": "zootopia"}, {"ticket"}, USER))
    tr.update_agent(SemanticFrame(DialogueAct.REQUEST, {}, {"date"}, AGENT))
    tr.update_user(SemanticFrame(DialogueAct.INFORM, {"date": "today"}, set(), USER))
    count = tr.kb_match_count()
    x = featurize(tr, count, 2, 40)
    # layout offsets: 0 user act | 11 user informs | 40 user requests | 69 agent act
    #                 80 agent informs | 109 agent requests | 138 turn | 139 bucket
    expected = {
        DialogueAct.INFORM.index,
        11 + idx("moviename"), 11 + idx("date"),
        40 + idx("ticket"),
        69 + DialogueAct.REQUEST.index,
        109 + idx("date"),
        139 + match_bucket(count),
    }
    nz = set(np.flatnonzero(x)) - {138}
    assert nz == expected
    assert x[138] == pytest.approx(2 / 40)


def test_featurize_is_pure(env, rng):
    s = env.reset(rng)
    tr = env.tracker
    a = featurize(tr, tr.kb_match_count(), 1, 40)
    b = featurize(tr, tr.kb_match_count(), 1, 40)
    assert np.array_equal(a, b) and np.array_equal(a, s)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_reachable_states_are_well_formed(senv, seed):
    env = senv
    rng = np.random.default_rng(seed)
    s = env.reset(rng)
    done = False
    states = [s]
    while not done:
        s, _, done, _ = env.step(int(rng.integers(env.n_actions)))
        states.append(s)
    for x in states:
        assert np.all((x >= 0) & (x <= 1))
        for lo, hi in ((0, 11), (69, 80), (139, 145)):
            assert x[lo:hi].sum() in (0.0, 1.0)
        assert x[139:145].sum() == 1.0


def test_parse_frame_syntax():
    f = parse_frame("request(ticket, moviename=X)")
    assert f.act == DialogueAct.REQUEST
    assert f.request_slots == {"ticket"} and dict(f.inform_slots) == {"moviename": "X"}
    d = parse_frame("deny()")
    assert d.act == DialogueAct.DENY and not d.inform_slots and not d.request_slots
    assert parse_frame("inform(starttime=7:15pm, city=san francisco)").inform_slots["city"] == "san francisco"
    for bad in ("deny", "dance()", "inform(=x)", "inform(a,,b)"):
        with pytest.raises(ValueError):
            parse_frame(bad)


def test_frame_invariants(ontology):
    with pytest.raises(ValueError):
        SemanticFrame(DialogueAct.INFORM, {"date": "today"}, {"date"})
    with pytest.raises(ValueError):
        SemanticFrame(DialogueAct.INFORM, {"date": "someday"}).validate(ontology)
    SemanticFrame(DialogueAct.INFORM, {"date": "anything"}).validate(ontology)
    with pytest.raises(ValueError):
        UserGoal({"date": "today"}, frozenset())
