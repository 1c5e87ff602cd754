"""Public settings API."""
from __future__ import annotations

from cgenlab.schemas.payload import RunConfig
from cgenlab.schemas.settings.runtime import CgenSettings

__all__ = ["CgenSettings", "RunConfig"]
