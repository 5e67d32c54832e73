/** The built-in 1D colormaps, matching the server's registry. */

export type Rgb = [number, number, number];

const VIRIDIS: Rgb[] = [
  [68, 1, 84], [71, 44, 122], [59, 81, 139], [44, 113, 142],
  [33, 144, 141], [39, 173, 129], [92, 200, 99], [170, 220, 50], [253, 231, 37],
];

const PLASMA: Rgb[] = [
  [13, 8, 135], [84, 2, 163], [139, 10, 165], [185, 50, 137],
  [219, 92, 104], [244, 136, 73], [254, 188, 43], [240, 249, 33],
];

const GRAYSCALE: Rgb[] = [[0, 0, 0], [255, 255, 255]];

const COOLWARM: Rgb[] = [
  [59, 76, 192], [124, 159, 249], [192, 212, 245], [242, 242, 242],
  [245, 192, 157], [222, 108, 86], [180, 4, 38],
];

const RAMPS: Record<string, Rgb[]> = {
  viridis: VIRIDIS,
  plasma: PLASMA,
  grayscale: GRAYSCALE,
  coolwarm: COOLWARM,
};

export const COLORMAP_NAMES = Object.keys(RAMPS);

/** Map t in [0,1] through a named ramp with linear interpolation. */
export function colormap(name: string, t: number): Rgb {
  const ramp = RAMPS[name] ?? VIRIDIS;
  const clamped = Math.min(1, Math.max(0, t));
  const position = clamped * (ramp.length - 1);
  const low = Math.floor(position);
  const high = Math.min(low + 1, ramp.length - 1);
  const f = position - low;
  return [0, 1, 2].map((c) => Math.round(ramp[low][c] * (1 - f) + ramp[high][c] * f)) as Rgb;
}

export function cssColor([r, g, b]: Rgb, alpha = 1): string {
  return `rgba(${r},${g},${b},${alpha})`;
}
