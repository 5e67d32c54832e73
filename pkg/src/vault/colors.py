"""Built-in color tables.

COLORMAPS is the registry of 1D colormap names available to ColorMap1D
actions and to view plugins; QUALITATIVE_PALETTE supplies cluster colors,
cycled in order.
"""

COLORMAPS = ("viridis", "plasma", "grayscale", "coolwarm")

# RGBA, 8 bit per channel.  Based on a common qualitative scheme.
QUALITATIVE_PALETTE = (
    (31, 119, 180, 255),
    (255, 127, 14, 255),
    (44, 160, 44, 255),
    (214, 39, 40, 255),
    (148, 103, 189, 255),
    (140, 86, 75, 255),
    (227, 119, 194, 255),
    (127, 127, 127, 255),
    (188, 189, 34, 255),
    (23, 190, 207, 255),
)


def palette_color(index: int) -> tuple:
    return QUALITATIVE_PALETTE[index % len(QUALITATIVE_PALETTE)]
