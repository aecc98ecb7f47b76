"""Ray-cast LiDAR over the 2D arena and its depth-image projection.

Walls and columns are treated as vertically extruded surfaces, so a ray at
elevation e hits at the same 2D point as the e=0 ray and its 3D range is
the 2D distance divided by cos(e). Returned points are in the sensor frame
(x forward, y left, z up).

The depth image is an equirectangular grid: axis 0 bins azimuth (H bins),
axis 1 bins elevation (W bins). Pixel = min hit range in the bin, clipped
to max range and normalized by it. Gaps are filled nearest-neighbor along
each constant-elevation azimuth scanline; scanlines with no return at all
stay at the 1.0 max-range fill.
"""

from __future__ import annotations

import numpy as np

from .arena import Arena, LidarConfig


def ray_distances_2d(position, heading, directions_rel, arena: Arena) -> np.ndarray:
    """Min positive distance along each relative-azimuth ray to a wall or
    column edge; inf where nothing is hit (cannot happen inside the bounds)."""
    px, py = position
    angles = heading + directions_rel
    dx = np.cos(angles)
    dy = np.sin(angles)
    xmin, xmax, ymin, ymax = arena.bounds

    with np.errstate(divide="ignore"):
        tx = np.where(dx > 0, (xmax - px) / dx, np.where(dx < 0, (xmin - px) / dx, np.inf))
        ty = np.where(dy > 0, (ymax - py) / dy, np.where(dy < 0, (ymin - py) / dy, np.inf))
    best = np.minimum(tx, ty)

    for cx, cy, r in arena.obstacles:
        ocx, ocy = cx - px, cy - py
        proj = ocx * dx + ocy * dy
        closest2 = ocx * ocx + ocy * ocy - proj * proj
        disc = r * r - closest2
        valid = (disc >= 0) & (proj > 0)
        t = np.where(valid, proj - np.sqrt(np.where(valid, disc, 0.0)), np.inf)
        t = np.where(t > 0, t, np.inf)
        best = np.minimum(best, t)
    return best


def lidar_scan(position, heading, arena: Arena, cfg: LidarConfig | None = None) -> np.ndarray:
    """Cast the configured ray fan; returns (N, 3) sensor-frame hit points."""
    cfg = cfg or arena.lidar
    az = cfg.azimuth_angles()
    el = cfg.elevation_angles()
    d2 = ray_distances_2d(position, heading, az, arena)  # per azimuth

    cos_el = np.cos(el)
    rng = d2[:, None] / cos_el[None, :]  # (n_az, n_el) 3D ranges
    hit = rng <= cfg.max_range
    if not np.any(hit):
        return np.zeros((0, 3))
    az_g, el_g = np.meshgrid(az, el, indexing="ij")
    x = rng * np.cos(el_g) * np.cos(az_g)
    y = rng * np.cos(el_g) * np.sin(az_g)
    z = rng * np.sin(el_g)
    pts = np.stack([x[hit], y[hit], z[hit]], axis=1)
    return pts


def depth_image(points: np.ndarray, cfg: LidarConfig) -> np.ndarray:
    """Project sensor-frame points into the (H, W) normalized depth image."""
    H = cfg.image_azimuth_bins
    W = cfg.image_elevation_bins
    img = np.full((H, W), np.inf)
    if len(points):
        x, y, z = points[:, 0], points[:, 1], points[:, 2]
        rng = np.sqrt(x * x + y * y + z * z)
        az = np.arctan2(y, x)
        el = np.arctan2(z, np.sqrt(x * x + y * y))
        half_az = np.deg2rad(cfg.fov_deg) / 2.0
        half_el = np.deg2rad(cfg.elevation_span_deg) / 2.0
        ai = np.clip(((az + half_az) / (2 * half_az) * H).astype(int), 0, H - 1)
        ei = np.clip(((el + half_el) / (2 * half_el) * W).astype(int), 0, W - 1)
        np.minimum.at(img, (ai, ei), rng)

    empty_mask = ~np.isfinite(img)
    img[~empty_mask] = np.minimum(img[~empty_mask], cfg.max_range) / cfg.max_range
    # nearest-neighbor fill along the azimuth scanline of each elevation bin
    for w in range(W):
        col = img[:, w]
        gaps = np.flatnonzero(empty_mask[:, w])
        if gaps.size == H:
            col[:] = 1.0
            continue
        if gaps.size:
            filled = np.flatnonzero(~empty_mask[:, w])
            pos = np.searchsorted(filled, gaps)
            left = filled[np.clip(pos - 1, 0, filled.size - 1)]
            right = filled[np.clip(pos, 0, filled.size - 1)]
            nearest = np.where(np.abs(gaps - left) <= np.abs(right - gaps), left, right)
            col[gaps] = col[nearest]
    return img.astype(np.float32)


def observe_depth(position, heading, arena: Arena, cfg: LidarConfig | None = None) -> np.ndarray:
    cfg = cfg or arena.lidar
    return depth_image(lidar_scan(position, heading, arena, cfg), cfg)
