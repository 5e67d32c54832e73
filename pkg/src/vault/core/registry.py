"""Plugin registration, compatibility matching, instantiation, and teardown.

Six plugin kinds exist: data types, views, analytics, transformations,
loaders, and writers. Plugins are statically registered factories behind a
uniform interface; the registry matches them to datasets by the raw
payload kinds they accept, instantiates them, and guarantees teardown
(event subscriptions removed, linked actions disconnected, running workers
cancelled cooperatively).

Analytics and transformation instances follow the standard lifecycle: on
instantiation they derive their output dataset under the first input and
attach their settings actions to it; ``control("start")`` launches the
worker, which must poll its :class:`RunControl` at iteration boundaries so
pause/resume/cancel take effect within one boundary.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from vault.core.actions import ActionKind
from vault.core.events import EventFilter
from vault.errors import NameCollisionError, NotFoundError, ValidationError
from vault.ids import new_guid

logger = logging.getLogger(__name__)


class PluginKind(Enum):
    DATA_TYPE = "DataType"
    VIEW = "View"
    ANALYTICS = "Analytics"
    TRANSFORMATION = "Transformation"
    LOADER = "Loader"
    WRITER = "Writer"


_NEEDS_INPUT_DECLARATION = (PluginKind.ANALYTICS, PluginKind.TRANSFORMATION,
                            PluginKind.VIEW, PluginKind.WRITER)


@dataclass(frozen=True)
class PluginDescriptor:
    plugin_id: str  # reverse-DNS style, unique
    kind: PluginKind
    display_name: str
    accepted_input_kinds: frozenset = frozenset()
    version: str = "1.0.0"

    def __post_init__(self):
        object.__setattr__(self, "accepted_input_kinds",
                           frozenset(self.accepted_input_kinds))
        if self.kind in _NEEDS_INPUT_DECLARATION and not self.accepted_input_kinds:
            raise ValidationError(
                f"{self.kind.value} plugin {self.plugin_id} must accept >= 1 input kind")


class InstanceState(Enum):
    CREATED = "Created"
    RUNNING = "Running"
    PAUSED = "Paused"
    FINISHED = "Finished"
    FAILED = "Failed"


class RunControl:
    """Cooperative pause/resume/cancel flags, polled at iteration boundaries."""

    def __init__(self):
        self._resume = threading.Event()
        self._resume.set()
        self._cancel = threading.Event()

    def pause(self):
        self._resume.clear()

    def resume(self):
        self._resume.set()

    def cancel(self):
        self._cancel.set()
        self._resume.set()  # unblock a paused worker so it can exit

    @property
    def cancelled(self) -> bool:
        return self._cancel.is_set()

    def checkpoint(self) -> bool:
        """Block while paused; returns False once cancelled."""
        self._resume.wait()
        return not self._cancel.is_set()


@dataclass
class PluginInstance:
    instance_id: str
    descriptor: PluginDescriptor
    bound_inputs: list[str]
    plugin: "Plugin"
    settings_root: Optional[str] = None
    output_dataset: Optional[str] = None
    state: InstanceState = InstanceState.CREATED
    control: RunControl = field(default_factory=RunControl)
    subscriptions: list[int] = field(default_factory=list)
    worker: Optional[threading.Thread] = None
    progress_listeners: list[Callable[[int, int], None]] = field(default_factory=list)
    last_error: str = ""

    def report_progress(self, done: int, total: int) -> None:
        for listener in list(self.progress_listeners):
            try:
                listener(done, total)
            except Exception:
                logger.exception("progress listener failed")


class PluginContext:
    """Everything a plugin implementation may touch.

    Core state must only be accessed through ``submit`` (the serialized
    core command queue); worker threads never mutate managers directly.
    """

    def __init__(self, app, instance: PluginInstance):
        self.app = app
        self.instance = instance

    @property
    def data(self):
        return self.app.data

    @property
    def actions(self):
        return self.app.actions

    @property
    def events(self):
        return self.app.bus

    def submit(self, fn, *args, **kwargs):
        return self.app.submit(fn, *args, **kwargs)

    def subscribe(self, handler, filter: EventFilter = None) -> int:
        sub_id = self.app.bus.subscribe(handler, filter or EventFilter())
        self.instance.subscriptions.append(sub_id)
        return sub_id


class Plugin:
    """Base class for all plugin implementations."""

    descriptor: PluginDescriptor

    def __init__(self, ctx: PluginContext):
        self.ctx = ctx

    def init(self) -> None:
        """Wire-up hook, called once the instance record exists."""

    def teardown(self) -> None:
        """Cleanup hook; registry-managed resources are already released."""


class ViewPlugin(Plugin):
    """Core-side stub of a view: holds settings and event subscriptions."""

    def build_settings(self) -> Optional[str]:
        return None

    def init(self) -> None:
        self.received = []
        self._resubscribe()

    def _resubscribe(self) -> None:
        for sub_id in self.ctx.instance.subscriptions:
            self.ctx.events.unsubscribe(sub_id)
        self.ctx.instance.subscriptions.clear()
        if self.ctx.instance.bound_inputs:
            self.ctx.subscribe(self.received.append,
                               EventFilter.of(datasets=self.ctx.instance.bound_inputs))

    def bind(self, dataset_ids: list[str]) -> None:
        self.ctx.instance.bound_inputs = list(dataset_ids)
        self._resubscribe()


class AnalyticsPlugin(Plugin):
    """Data consumer/producer with a derived output and a settings tree."""

    output_name = "output"

    def build_settings(self) -> str:
        """Create the settings Group (named after the plugin id)."""
        return self.ctx.actions.create_action(ActionKind.GROUP, self.descriptor.plugin_id)

    def create_output(self) -> str:
        raise NotImplementedError

    def run(self, control: RunControl) -> None:
        raise NotImplementedError


class TransformationPlugin(AnalyticsPlugin):
    """Analytics whose output must keep the input's exact shape."""


class LoaderPlugin(Plugin):
    def load(self, path, **options) -> str:
        raise NotImplementedError


class WriterPlugin(Plugin):
    def write(self, dataset_id: str, path) -> None:
        raise NotImplementedError


Factory = Callable[[PluginContext], Plugin]


class PluginRegistry:
    def __init__(self, app):
        self._app = app
        self._plugins: dict[str, tuple[PluginDescriptor, Factory]] = {}
        self._instances: dict[str, PluginInstance] = {}

    # -- registration and discovery ---------------------------------------

    def register_plugin(self, descriptor: PluginDescriptor, factory: Factory) -> None:
        if descriptor.plugin_id in self._plugins:
            raise NameCollisionError(f"plugin id {descriptor.plugin_id!r} already registered")
        self._plugins[descriptor.plugin_id] = (descriptor, factory)

    def register_class(self, plugin_cls) -> None:
        self.register_plugin(plugin_cls.descriptor, plugin_cls)

    def descriptor(self, plugin_id: str) -> PluginDescriptor:
        try:
            return self._plugins[plugin_id][0]
        except KeyError:
            raise NotFoundError(f"unknown plugin {plugin_id!r}") from None

    def list_plugins(self, kind: Optional[PluginKind] = None) -> list[PluginDescriptor]:
        found = [d for d, _ in self._plugins.values() if kind is None or d.kind is kind]
        return sorted(found, key=lambda d: d.display_name)

    def list_compatible(self, dataset_id: str,
                        kind: Optional[PluginKind] = None) -> list[PluginDescriptor]:
        payload_kind = self._app.data.record(dataset_id).payload.kind
        return [d for d in self.list_plugins(kind)
                if payload_kind in d.accepted_input_kinds]

    # -- instances ---------------------------------------------------------

    def instance(self, instance_id: str) -> PluginInstance:
        try:
            return self._instances[instance_id]
        except KeyError:
            raise NotFoundError(f"unknown plugin instance {instance_id}") from None

    def instances(self) -> list[PluginInstance]:
        return list(self._instances.values())

    def instantiate(self, plugin_id: str, inputs: list[str] | None = None, *,
                    instance_id: Optional[str] = None, restore: bool = False) -> str:
        """Create an instance bound to ``inputs``.

        Analytics/transformations derive their output dataset under the
        first input and attach their settings tree to it (skipped when
        ``restore`` is set: persisted sessions bring their own outputs
        and settings).
        """
        descriptor, factory = self._plugins.get(plugin_id, (None, None))
        if descriptor is None:
            raise NotFoundError(f"unknown plugin {plugin_id!r}")
        inputs = list(inputs or [])
        for dataset_id in inputs:
            payload_kind = self._app.data.record(dataset_id).payload.kind
            if payload_kind not in descriptor.accepted_input_kinds:
                raise ValidationError(
                    f"{descriptor.display_name} does not accept {payload_kind!r} data")
        if (descriptor.kind in (PluginKind.ANALYTICS, PluginKind.TRANSFORMATION,
                                PluginKind.WRITER) and not inputs and not restore):
            # Restored instances may come back unbound, awaiting drag-and-drop.
            raise ValidationError(f"{descriptor.display_name} needs an input dataset")
        instance = PluginInstance(
            instance_id=instance_id or new_guid(),
            descriptor=descriptor,
            bound_inputs=inputs,
            plugin=None,
        )
        ctx = PluginContext(self._app, instance)
        instance.plugin = factory(ctx)
        self._instances[instance.instance_id] = instance
        try:
            if descriptor.kind in (PluginKind.ANALYTICS, PluginKind.TRANSFORMATION):
                instance.settings_root = instance.plugin.build_settings()
                if not restore:
                    instance.output_dataset = instance.plugin.create_output()
                    if instance.settings_root is not None:
                        self._app.actions.attach_to_dataset(
                            instance.settings_root, instance.output_dataset)
            elif isinstance(instance.plugin, ViewPlugin):
                instance.settings_root = instance.plugin.build_settings()
            instance.plugin.init()
        except Exception:
            self._instances.pop(instance.instance_id, None)
            raise
        return instance.instance_id

    def adopt_output(self, instance_id: str, dataset_id: str) -> None:
        """Bind a restored instance to its persisted output dataset."""
        instance = self.instance(instance_id)
        instance.output_dataset = dataset_id
        if instance.settings_root is not None:
            self._app.actions.attach_to_dataset(instance.settings_root, dataset_id)

    # -- lifecycle ---------------------------------------------------------

    def control(self, instance_id: str, command: str) -> InstanceState:
        instance = self.instance(instance_id)
        if command == "start":
            self._start(instance)
        elif command == "pause":
            if instance.state is InstanceState.RUNNING:
                instance.control.pause()
                instance.state = InstanceState.PAUSED
        elif command == "resume":
            if instance.state is InstanceState.PAUSED:
                instance.control.resume()
                instance.state = InstanceState.RUNNING
        elif command == "cancel":
            instance.control.cancel()
        else:
            raise ValidationError(f"unknown control command {command!r}")
        return instance.state

    def _start(self, instance: PluginInstance) -> None:
        if instance.state in (InstanceState.RUNNING, InstanceState.PAUSED):
            raise ValidationError(f"{instance.descriptor.display_name} is already running")
        if not isinstance(instance.plugin, AnalyticsPlugin):
            raise ValidationError(f"{instance.descriptor.display_name} is not runnable")
        instance.control = RunControl()
        instance.state = InstanceState.RUNNING
        instance.worker = threading.Thread(
            target=self._run_worker, args=(instance,),
            name=f"vault-{instance.descriptor.plugin_id}", daemon=True)
        instance.worker.start()

    def _run_worker(self, instance: PluginInstance) -> None:
        try:
            instance.plugin.run(instance.control)
            if instance.descriptor.kind is PluginKind.TRANSFORMATION:
                self._app.submit(self._check_transformation_shape, instance)
        except Exception as exc:
            logger.exception("plugin %s failed", instance.descriptor.plugin_id)
            self._app.submit(self._set_state, instance, InstanceState.FAILED, str(exc))
        else:
            self._app.submit(self._set_state, instance, InstanceState.FINISHED)

    def _check_transformation_shape(self, instance: PluginInstance) -> None:
        # Transformations must produce data of the input's exact shape.
        if not instance.bound_inputs or instance.output_dataset is None:
            return
        source = self._app.data.get_data_view(instance.bound_inputs[0])
        result = self._app.data.get_data_view(instance.output_dataset)
        if source.shape != result.shape:
            raise ValidationError(
                f"transformation changed shape: {source.shape} -> {result.shape}")

    def _set_state(self, instance: PluginInstance, state: InstanceState,
                   message: str = "") -> None:
        instance.state = state
        instance.last_error = message

    def wait(self, instance_id: str, timeout: Optional[float] = None) -> InstanceState:
        """Join a running worker (never call while holding the core lock)."""
        instance = self.instance(instance_id)
        worker = instance.worker
        if worker is not None:
            worker.join(timeout)
        return instance.state

    def run_to_completion(self, instance_id: str,
                          timeout: Optional[float] = None) -> InstanceState:
        self._app.submit(self.control, instance_id, "start")
        return self.wait(instance_id, timeout)

    def destroy_instance(self, instance_id: str) -> None:
        """Teardown: unsubscribe, disconnect links, cancel work. Idempotent."""
        instance = self._instances.pop(instance_id, None)
        if instance is None:
            return
        instance.control.cancel()
        for sub_id in instance.subscriptions:
            self._app.bus.unsubscribe(sub_id)
        instance.subscriptions.clear()
        if instance.settings_root is not None:
            self._disconnect_tree(instance.settings_root)
        try:
            instance.plugin.teardown()
        except Exception:
            logger.exception("teardown of %s failed", instance.descriptor.plugin_id)

    def _disconnect_tree(self, root_id: str) -> None:
        actions = self._app.actions
        try:
            action = actions.action(root_id)
        except NotFoundError:
            return
        actions.force_disconnect(root_id)
        for child in action.children:
            self._disconnect_tree(child)
