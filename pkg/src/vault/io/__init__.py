from vault.io.csvio import CsvOptions, load_csv_values, write_csv_values
from vault.io.mvbin import parse_mvbin, read_mvbin, serialize_mvbin, write_mvbin
from vault.io.imagestack import ImageStackOptions, detect_stack, load_image_stack_values

__all__ = [
    "CsvOptions",
    "load_csv_values",
    "write_csv_values",
    "parse_mvbin",
    "read_mvbin",
    "serialize_mvbin",
    "write_mvbin",
    "ImageStackOptions",
    "detect_stack",
    "load_image_stack_values",
]
