"""Modular, data-centric visual analytics core.

The :class:`~vault.app.Application` facade wires together the dataset
hierarchy with shared selections, the event bus, linkable typed parameters
(actions), the plugin registry with built-in analytics (PCA, progressive
t-SNE, KDE mean-shift, normalization) and loaders/writers, project and
workspace persistence, and the session service consumed by the web
frontend and the CLI.
"""

from vault.app import Application

__all__ = ["Application"]
__version__ = "0.1.0"
