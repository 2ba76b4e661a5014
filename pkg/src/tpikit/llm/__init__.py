"""Chat-completions client for description, augmentation and relevance prompts."""

from .client import ChatClient, ClientStats, EndpointConfig, RelevanceResult, normalize_token
from .prompts import DESCRIBE_VARIANTS, PROMPT_VERSION, RELEVANCE_PHRASINGS

__all__ = ["ChatClient", "ClientStats", "EndpointConfig", "RelevanceResult", "normalize_token",
           "DESCRIBE_VARIANTS", "PROMPT_VERSION", "RELEVANCE_PHRASINGS"]
