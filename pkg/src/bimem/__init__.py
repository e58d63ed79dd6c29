"""Bidirectional hierarchical memory for long-term conversational agents.

Conversations are distilled bottom-up into facts, LPA-clustered scenes and a
five-dimension persona, then each scene is calibrated top-down against the
persona. Retrieval ranks all three levels together and spreads activation
one hop between facts and their scenes.
"""

from .construction import ConstructionConfig, Conversation, Turn, construct_memory, inductive_pass, reflective_pass
from .embedding import HashEmbedder, RemoteEmbedder, cosine_sim, deterministic_embed
from .evaluation import QAItem, assemble_context, bleu1, load_dataset, run_eval, token_f1
from .graph import build_edges, lpa_cluster
from .kernels import BACKEND as KERNEL_BACKEND
from .model import (
    PERSONA_KEYS,
    FactUnit,
    MemoryBank,
    PersonaDimension,
    PersonaProfile,
    RetrievalUnit,
    RetrievedSet,
    SceneUnit,
    scene_text,
    validate_bank,
)
from .operators import MockBackend, RemoteChatBackend
from .retrieval import RetrievalConfig, Retriever, retrieve
from .store import load_bank, save_bank

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "PERSONA_KEYS",
    "ConstructionConfig",
    "Conversation",
    "FactUnit",
    "HashEmbedder",
    "MemoryBank",
    "MockBackend",
    "PersonaDimension",
    "PersonaProfile",
    "QAItem",
    "RemoteChatBackend",
    "RemoteEmbedder",
    "RetrievalConfig",
    "RetrievalUnit",
    "RetrievedSet",
    "Retriever",
    "SceneUnit",
    "Turn",
    "assemble_context",
    "bleu1",
    "build_edges",
    "construct_memory",
    "cosine_sim",
    "deterministic_embed",
    "inductive_pass",
    "load_bank",
    "load_dataset",
    "lpa_cluster",
    "reflective_pass",
    "retrieve",
    "run_eval",
    "save_bank",
    "scene_text",
    "token_f1",
    "validate_bank",
]
