"""Built-in analytics and transformation plugins.

Each plugin derives its output dataset under its input, exposes its
parameters as an attached action tree, and runs on a worker thread that
writes snapshots back through the core command queue. A "start" trigger
is attached so other plugins (and the GUI) can launch the computation.
"""

from __future__ import annotations

import numpy as np

from vault.analytics.kde import DEFAULT_RESOLUTION, mean_shift_cluster
from vault.analytics.normalize import MODES, normalize_values
from vault.analytics.pca import pca_fit
from vault.analytics.tsne import METRICS, TsneParams, tsne_init, tsne_step
from vault.core.actions import ActionKind
from vault.core.payloads import ClusterPayload, PointPayload
from vault.core.registry import (
    AnalyticsPlugin,
    PluginDescriptor,
    PluginKind,
    RunControl,
    TransformationPlugin,
)
from vault.errors import ValidationError


class _SettingsMixin:
    """Settings-tree helpers shared by the built-in analytics plugins."""

    def _child(self, name: str) -> str:
        root = self.ctx.actions.action(self.ctx.instance.settings_root)
        for child_id in root.children:
            if self.ctx.actions.action(child_id).name == name:
                return child_id
        raise ValidationError(f"no setting named {name!r}")

    def _value(self, name: str):
        return self.ctx.actions.value_of(self._child(name))

    def _add(self, root_id: str, kind: ActionKind, name: str, **fields) -> str:
        child = self.ctx.actions.create_action(kind, name, **fields)
        self.ctx.actions.add_child(root_id, child)
        return child

    def _wire_start_trigger(self, start_id: str) -> None:
        instance_id = self.ctx.instance.instance_id

        def on_change(change):
            if change.scope == "trigger" and change.target == start_id:
                self.ctx.app.registry.control(instance_id, "start")

        self._observers = getattr(self, "_observers", [])
        self._observers.append(on_change)
        self.ctx.actions.add_observer(on_change)

    def teardown(self) -> None:
        for observer in getattr(self, "_observers", []):
            self.ctx.actions.remove_observer(observer)

    def _input_view(self) -> np.ndarray:
        return self.ctx.submit(self.ctx.data.get_data_view,
                               self.ctx.instance.bound_inputs[0])

    def _input_name(self) -> str:
        return self.ctx.data.record(self.ctx.instance.bound_inputs[0]).name


class TsnePlugin(_SettingsMixin, AnalyticsPlugin):
    descriptor = PluginDescriptor(
        plugin_id="org.vault.tsne",
        kind=PluginKind.ANALYTICS,
        display_name="t-SNE",
        accepted_input_kinds=frozenset({"points"}),
    )

    def build_settings(self) -> str:
        root = super().build_settings()
        self._add(root, ActionKind.DECIMAL, "perplexity",
                  value=30.0, min=0.1, max=1000.0, step=1.0, decimals=1)
        self._add(root, ActionKind.INTEGRAL, "iterations", value=1000, min=1, max=100_000)
        self._add(root, ActionKind.INTEGRAL, "exaggeration iterations",
                  value=250, min=0, max=100_000)
        self._add(root, ActionKind.DECIMAL, "exaggeration factor",
                  value=4.0, min=1.0, max=50.0, step=0.5, decimals=1)
        self._add(root, ActionKind.DECIMAL, "learning rate",
                  value=200.0, min=0.01, max=10_000.0, step=10.0, decimals=2)
        self._add(root, ActionKind.INTEGRAL, "update every", value=10, min=1, max=100_000)
        self._add(root, ActionKind.OPTION, "metric", choices=list(METRICS), current_index=0)
        self._add(root, ActionKind.INTEGRAL, "seed", value=0, min=0, max=2**31 - 1)
        self._wire_start_trigger(self._add(root, ActionKind.TRIGGER, "start"))
        return root

    def create_output(self) -> str:
        source = self.ctx.instance.bound_inputs[0]
        n = self.ctx.data.effective_count(source)
        payload = PointPayload(np.zeros((n, 2), dtype=np.float32), ["x", "y"])
        return self.ctx.data.derive_dataset(source, "t-SNE embedding", payload)

    def _params(self) -> TsneParams:
        return TsneParams(
            perplexity=self._value("perplexity"),
            iterations=self._value("iterations"),
            exaggeration_iters=self._value("exaggeration iterations"),
            exaggeration_factor=self._value("exaggeration factor"),
            learning_rate=self._value("learning rate"),
            update_every=self._value("update every"),
            distance_metric=METRICS[self._value("metric")],
            seed=self._value("seed"),
        )

    def run(self, control: RunControl) -> None:
        params = self.ctx.submit(self._params)
        data = self._input_view()
        params.validate(data.shape[0])
        state = tsne_init(data, params)
        output = self.ctx.instance.output_dataset
        while state.iteration < params.iterations:
            if not control.checkpoint():
                return
            block = min(params.update_every, params.iterations - state.iteration)
            # Learning rate and exaggeration factor are hot-swappable.
            snapshot = tsne_step(
                state, block,
                learning_rate=self.ctx.submit(self._value, "learning rate"),
                exaggeration_factor=self.ctx.submit(self._value, "exaggeration factor"),
            )
            self.ctx.submit(self.ctx.data.set_point_values, output,
                            snapshot.astype(np.float32))
            self.ctx.instance.report_progress(state.iteration, params.iterations)


class PcaPlugin(_SettingsMixin, AnalyticsPlugin):
    descriptor = PluginDescriptor(
        plugin_id="org.vault.pca",
        kind=PluginKind.ANALYTICS,
        display_name="PCA",
        accepted_input_kinds=frozenset({"points"}),
    )

    def build_settings(self) -> str:
        root = super().build_settings()
        self._add(root, ActionKind.INTEGRAL, "components", value=2, min=1, max=1024)
        self._wire_start_trigger(self._add(root, ActionKind.TRIGGER, "start"))
        return root

    def create_output(self) -> str:
        source = self.ctx.instance.bound_inputs[0]
        n = self.ctx.data.effective_count(source)
        payload = PointPayload(np.zeros((n, 2), dtype=np.float32), ["pc1", "pc2"])
        return self.ctx.data.derive_dataset(source, "PCA projection", payload)

    def run(self, control: RunControl) -> None:
        data = self._input_view()
        k = min(self.ctx.submit(self._value, "components"),
                data.shape[0] - 1, data.shape[1])
        result = pca_fit(data, k)
        if not control.checkpoint():
            return
        self.ctx.submit(self.ctx.data.set_point_values,
                        self.ctx.instance.output_dataset,
                        result.projected.astype(np.float32),
                        [f"pc{i + 1}" for i in range(k)])
        self.ctx.instance.report_progress(1, 1)


class MeanShiftPlugin(_SettingsMixin, AnalyticsPlugin):
    """KDE-grid mean-shift over the first two dimensions of the input.

    Changing the kernel bandwidth (sigma) after a finished run re-clusters
    automatically, so a sigma linked from the shared pool steers the
    clustering live.
    """

    descriptor = PluginDescriptor(
        plugin_id="org.vault.meanshift",
        kind=PluginKind.ANALYTICS,
        display_name="Mean-shift clustering",
        accepted_input_kinds=frozenset({"points"}),
    )

    def build_settings(self) -> str:
        root = super().build_settings()
        sigma_id = self._add(root, ActionKind.DECIMAL, "sigma",
                             value=self._default_sigma(), min=1e-6, max=1e6,
                             step=0.01, decimals=4)
        self._add(root, ActionKind.INTEGRAL, "resolution",
                  value=DEFAULT_RESOLUTION, min=8, max=2048)
        self._wire_start_trigger(self._add(root, ActionKind.TRIGGER, "start"))
        self._wire_sigma_observer(sigma_id)
        return root

    def _default_sigma(self) -> float:
        if not self.ctx.instance.bound_inputs:
            return 0.15
        view = self.ctx.data.get_data_view(self.ctx.instance.bound_inputs[0])
        if view.size == 0:
            return 0.15
        extent = float((view[:, :2].max(axis=0) - view[:, :2].min(axis=0)).max())
        return 0.05 * extent if extent > 0 else 0.15

    def _wire_sigma_observer(self, sigma_id: str) -> None:
        instance = self.ctx.instance
        registry = self.ctx.app.registry

        def on_change(change):
            if change.scope == "action" and change.target == sigma_id:
                if instance.state.value == "Finished":
                    registry.control(instance.instance_id, "start")

        self._observers = getattr(self, "_observers", [])
        self._observers.append(on_change)
        self.ctx.actions.add_observer(on_change)

    def create_output(self) -> str:
        source = self.ctx.instance.bound_inputs[0]
        return self.ctx.data.derive_dataset(source, "mean-shift clusters", ClusterPayload([]))

    def run(self, control: RunControl) -> None:
        data = self._input_view()
        if data.shape[1] < 2:
            raise ValidationError("mean-shift needs at least 2 dimensions")
        sigma = self.ctx.submit(self._value, "sigma")
        resolution = self.ctx.submit(self._value, "resolution")
        payload = mean_shift_cluster(data[:, :2].astype(np.float64), sigma, resolution)
        if not control.checkpoint():
            return
        self.ctx.submit(self.ctx.data.set_clusters,
                        self.ctx.instance.output_dataset, payload.clusters)
        self.ctx.instance.report_progress(1, 1)


class NormalizePlugin(_SettingsMixin, TransformationPlugin):
    descriptor = PluginDescriptor(
        plugin_id="org.vault.normalize",
        kind=PluginKind.TRANSFORMATION,
        display_name="Normalize",
        accepted_input_kinds=frozenset({"points"}),
    )

    def build_settings(self) -> str:
        root = super().build_settings()
        self._add(root, ActionKind.OPTION, "mode", choices=list(MODES), current_index=0)
        self._wire_start_trigger(self._add(root, ActionKind.TRIGGER, "start"))
        return root

    def create_output(self) -> str:
        source = self.ctx.instance.bound_inputs[0]
        view = self.ctx.data.get_data_view(source)
        payload = PointPayload(np.zeros_like(view), self.ctx.data.dim_names(source))
        return self.ctx.data.derive_dataset(source, "normalized", payload)

    def run(self, control: RunControl) -> None:
        data = self._input_view()
        mode = MODES[self.ctx.submit(self._value, "mode")]
        out = normalize_values(data, mode)
        if not control.checkpoint():
            return
        self.ctx.submit(self.ctx.data.set_point_values,
                        self.ctx.instance.output_dataset, out,
                        self.ctx.data.dim_names(self.ctx.instance.bound_inputs[0]))
        self.ctx.instance.report_progress(1, 1)
