"""Identifier generation.

All ids in the system (datasets, actions, plugin instances, groups) are
random 128-bit GUIDs rendered as 32 lowercase hex characters. They are
stable across save/load and unique without coordination.
"""

import re
import uuid

_GUID_RE = re.compile(r"^[0-9a-f]{32}$")


def new_guid() -> str:
    return uuid.uuid4().hex


def is_guid(value: str) -> bool:
    return bool(_GUID_RE.match(value))
