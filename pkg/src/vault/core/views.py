"""Core-side stubs of the built-in view plugins.

Rendering happens in the web frontend; these stubs hold each view's
settings tree (so presets, parameter linking, and workspace persistence
work) and its event subscriptions on the bound datasets.
"""

from __future__ import annotations

from vault.core.actions import ActionKind
from vault.core.registry import PluginDescriptor, PluginKind, ViewPlugin

ALL_PAYLOAD_KINDS = frozenset({"points", "clusters", "image"})


class _SettingsView(ViewPlugin):
    def _add(self, root_id, kind, name, **fields):
        child = self.ctx.actions.create_action(kind, name, **fields)
        self.ctx.actions.add_child(root_id, child)
        return child

    def build_settings(self):
        return self.ctx.actions.create_action(ActionKind.GROUP, self.descriptor.plugin_id)


class ScatterplotViewPlugin(_SettingsView):
    descriptor = PluginDescriptor(
        plugin_id="org.vault.scatterplot",
        kind=PluginKind.VIEW,
        display_name="Scatterplot",
        accepted_input_kinds=frozenset({"points"}),
    )

    def build_settings(self):
        root = super().build_settings()
        self._add(root, ActionKind.DECIMAL, "point size",
                  value=6.0, min=1.0, max=50.0, step=1.0, decimals=0, suffix="px")
        self._add(root, ActionKind.DECIMAL, "opacity",
                  value=1.0, min=0.0, max=1.0, step=0.05, decimals=2)
        self._add(root, ActionKind.COLORMAP_1D, "colormap")
        self._add(root, ActionKind.DIMENSION_PICKER, "color dimension")
        self._add(root, ActionKind.TOGGLE, "density mode", value=False)
        self._add(root, ActionKind.DECIMAL, "sigma",
                  value=0.15, min=1e-6, max=1e6, step=0.01, decimals=4)
        return root


class ImageViewPlugin(_SettingsView):
    descriptor = PluginDescriptor(
        plugin_id="org.vault.image_view",
        kind=PluginKind.VIEW,
        display_name="Image view",
        accepted_input_kinds=frozenset({"points", "image"}),
    )

    def build_settings(self):
        root = super().build_settings()
        self._add(root, ActionKind.COLORMAP_1D, "colormap")
        self._add(root, ActionKind.DECIMAL, "opacity",
                  value=1.0, min=0.0, max=1.0, step=0.05, decimals=2)
        self._add(root, ActionKind.INTEGRAL, "band", value=0, min=0, max=65535)
        return root


class DataHierarchyViewPlugin(_SettingsView):
    descriptor = PluginDescriptor(
        plugin_id="org.vault.data_hierarchy",
        kind=PluginKind.VIEW,
        display_name="Data hierarchy",
        accepted_input_kinds=ALL_PAYLOAD_KINDS,
    )


class DataPropertiesViewPlugin(_SettingsView):
    descriptor = PluginDescriptor(
        plugin_id="org.vault.data_properties",
        kind=PluginKind.VIEW,
        display_name="Data properties",
        accepted_input_kinds=ALL_PAYLOAD_KINDS,
    )
