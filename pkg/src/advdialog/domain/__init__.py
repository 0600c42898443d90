from .frames import AGENT, USER, SemanticFrame, UserGoal, parse_frame
from .kb import KnowledgeBase, generate_world, kb_query, load_goals, load_kb, save_goals, save_kb
from .ontology import (
    ANYTHING,
    NO_MATCH,
    TASKCOMPLETE,
    TICKET,
    DialogueAct,
    Ontology,
    OntologyError,
    load_ontology,
)
from .tracker import ActionSpace, AgentAction, DialogueTracker, featurize, match_bucket, state_dim

__all__ = [
    "AGENT", "USER", "SemanticFrame", "UserGoal", "parse_frame",
    "KnowledgeBase", "generate_world", "kb_query", "load_goals", "load_kb", "save_goals", "save_kb",
    "ANYTHING", "NO_MATCH", "TASKCOMPLETE", "TICKET", "DialogueAct", "Ontology", "OntologyError",
    "load_ontology", "ActionSpace", "AgentAction", "DialogueTracker", "featurize", "match_bucket",
    "state_dim",
]
