"""Exception types shared across modules."""

from __future__ import annotations


class SessionError(RuntimeError):
    """Operation not permitted in the session's current state."""


class ProfileLockedError(SessionError):
    """Feedback arrived after the profile was confirmed and frozen."""


class ProviderError(RuntimeError):
    """Transport failure or malformed payload from a completion provider."""


class ScriptExhaustedError(ProviderError):
    """A scripted test provider ran out of queued replies."""


class JudgeReplyError(RuntimeError):
    """The style judge or feedback translator never produced a usable reply."""
