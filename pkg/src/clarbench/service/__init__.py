"""Annotation campaign service: event-sourced state, journal, and HTTP API."""

from .app import ADMIN_TOKEN_ENV, create_app
from .journal import EventJournal, JournalError
from .state import (
    AccountState,
    AuthError,
    CampaignConfig,
    CampaignService,
    PolicyError,
    ServiceError,
    ServiceState,
    TutorialItem,
    campaign_config_from_dict,
    double_annotation_ids,
    replay,
)

__all__ = [
    "ADMIN_TOKEN_ENV",
    "AccountState",
    "AuthError",
    "CampaignConfig",
    "CampaignService",
    "EventJournal",
    "JournalError",
    "PolicyError",
    "ServiceError",
    "ServiceState",
    "TutorialItem",
    "campaign_config_from_dict",
    "create_app",
    "double_annotation_ids",
    "replay",
]
