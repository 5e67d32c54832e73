"""Loader and writer plugins over the CSV, MVBIN, and image-stack codecs."""

from __future__ import annotations

from pathlib import Path

from vault.core.payloads import ImagePayload, PointPayload
from vault.core.registry import LoaderPlugin, PluginDescriptor, PluginKind, WriterPlugin
from vault.io.csvio import CsvOptions, load_csv_values, write_csv_values
from vault.io.imagestack import ImageStackOptions, detect_stack, load_image_stack_values
from vault.io.mvbin import read_mvbin, write_mvbin


class CsvLoaderPlugin(LoaderPlugin):
    descriptor = PluginDescriptor(
        plugin_id="org.vault.csv_loader",
        kind=PluginKind.LOADER,
        display_name="CSV loader",
    )

    def load(self, path, delimiter: str = ",", has_header: bool = True,
             name: str | None = None) -> str:
        values, dims = load_csv_values(path, CsvOptions(delimiter, has_header))
        payload = PointPayload(values, dims)

        def insert():
            dataset = self.ctx.data.add_dataset(payload, name or Path(path).stem)
            self.ctx.data.set_property(dataset, "source", str(path))
            return dataset

        return self.ctx.submit(insert)


class CsvWriterPlugin(WriterPlugin):
    descriptor = PluginDescriptor(
        plugin_id="org.vault.csv_writer",
        kind=PluginKind.WRITER,
        display_name="CSV writer",
        accepted_input_kinds=frozenset({"points"}),
    )

    def write(self, dataset_id: str, path, delimiter: str = ",",
              has_header: bool = True) -> None:
        values = self.ctx.submit(self.ctx.data.get_data_view, dataset_id)
        dims = self.ctx.submit(self.ctx.data.dim_names, dataset_id)
        write_csv_values(path, values, dims, CsvOptions(delimiter, has_header))


class BinaryLoaderPlugin(LoaderPlugin):
    descriptor = PluginDescriptor(
        plugin_id="org.vault.bin_loader",
        kind=PluginKind.LOADER,
        display_name="Binary loader",
    )

    def load(self, path, name: str | None = None) -> str:
        values, dims = read_mvbin(path)
        payload = PointPayload(values, dims)

        def insert():
            dataset = self.ctx.data.add_dataset(payload, name or Path(path).stem)
            self.ctx.data.set_property(dataset, "source", str(path))
            return dataset

        return self.ctx.submit(insert)


class BinaryWriterPlugin(WriterPlugin):
    descriptor = PluginDescriptor(
        plugin_id="org.vault.bin_writer",
        kind=PluginKind.WRITER,
        display_name="Binary writer",
        accepted_input_kinds=frozenset({"points"}),
    )

    def write(self, dataset_id: str, path) -> None:
        values = self.ctx.submit(self.ctx.data.get_data_view, dataset_id)
        dims = self.ctx.submit(self.ctx.data.dim_names, dataset_id)
        write_mvbin(path, values, dims)


class ImageStackLoaderPlugin(LoaderPlugin):
    """Loads a grayscale stack as points (pixels x bands) plus an image child."""

    descriptor = PluginDescriptor(
        plugin_id="org.vault.image_loader",
        kind=PluginKind.LOADER,
        display_name="Image stack loader",
    )

    def load(self, paths, subsample: int = 1, name: str | None = None,
             dim_names: list | None = None) -> tuple[str, str]:
        if isinstance(paths, (str, Path)) and Path(paths).is_dir():
            stack_name = name or Path(paths).name
            paths = detect_stack(paths)
        else:
            paths = list(paths)
            stack_name = name or Path(paths[0]).stem
        opts = ImageStackOptions(file_paths=paths, subsample_factor=subsample,
                                 dim_names=dim_names)
        values, width, height, dims = load_image_stack_values(opts)

        def insert():
            points = self.ctx.data.add_dataset(PointPayload(values, dims), stack_name)
            self.ctx.data.set_property(points, "source", str(paths[0].parent))
            image = self.ctx.data.add_dataset(
                ImagePayload(width, height), f"{stack_name} image", parent=points)
            self.ctx.data.set_property(image, "extents", f"{width}x{height}")
            return points, image

        return self.ctx.submit(insert)
