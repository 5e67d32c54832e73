from vault.project.store import (
    LoadReport,
    load_project,
    load_workspace,
    save_project,
    save_workspace,
)

__all__ = [
    "LoadReport",
    "load_project",
    "load_workspace",
    "save_project",
    "save_workspace",
]
