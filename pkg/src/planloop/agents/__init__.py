"""Interchangeable answer and plan providers."""

from .local import (
    NoisyAnswerer,
    NoisyPlanAgent,
    NoisyProfile,
    OracleAnswerer,
    OraclePlanAgent,
    ReplayAnswerer,
    ReplayExhausted,
    ReplayPlanAgent,
    ScriptedAnswerer,
    ScriptedPlanAgent,
    noisy_answer,
    oracle_answer,
    oracle_plan,
    plan_to_json,
    replay_answer,
)
from .remote import (
    ChatAnswerer,
    ChatEndpointConfig,
    ChatPlanAgent,
    ConfigurationError,
    EndpointError,
    chat_request,
)

__all__ = [
    "ChatAnswerer",
    "ChatEndpointConfig",
    "ChatPlanAgent",
    "ConfigurationError",
    "EndpointError",
    "NoisyAnswerer",
    "NoisyPlanAgent",
    "NoisyProfile",
    "OracleAnswerer",
    "OraclePlanAgent",
    "ReplayAnswerer",
    "ReplayExhausted",
    "ReplayPlanAgent",
    "ScriptedAnswerer",
    "ScriptedPlanAgent",
    "chat_request",
    "noisy_answer",
    "oracle_answer",
    "oracle_plan",
    "plan_to_json",
    "replay_answer",
]
