"""Shepp-Logan head phantom (Toft's modified intensities, range [0, 1])."""

import numpy as np

# intensity, semi-axis a (x), semi-axis b (y), center x, center y, angle (deg)
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)


def pixel_coordinates(n):
    """Pixel-center coordinates on [-1, 1]^2; x grows rightward, y upward."""
    c = (2.0 * np.arange(n) + 1.0 - n) / n
    x = c[None, :]
    y = -c[:, None]
    return x, y


def shepp_logan(n: int = 128) -> np.ndarray:
    if n < 16:
        raise ValueError(f"phantom size must be >= 16, got {n}")
    x, y = pixel_coordinates(n)
    img = np.zeros((n, n))
    for amp, a, b, x0, y0, deg in SHEPP_LOGAN_ELLIPSES:
        phi = np.deg2rad(deg)
        dx, dy = x - x0, y - y0
        xr = dx * np.cos(phi) + dy * np.sin(phi)
        yr = -dx * np.sin(phi) + dy * np.cos(phi)
        img += amp * ((xr / a) ** 2 + (yr / b) ** 2 <= 1.0)
    return np.clip(img, 0.0, 1.0)
