import numpy as np

from ..core.types import FrameSample
from .config import ScopeConfig

# (period px, orientation deg, amplitude, phase rad)
GRATINGS = (
    (37.0, 0.0, 34.0, 0.3),
    (29.0, 62.0, 30.0, 1.1),
    (23.0, 118.0, 26.0, 2.0),
    (41.0, 151.0, 28.0, 0.7),
)


def render_pixels(bend_x_deg, bend_y_deg, insertion_mm, cfg=None):
    """
    Procedural grating texture seen by the tip camera.
    Parameters
    ----------
    bend_x_deg, bend_y_deg : float
        The texture shifts by ``cfg.pixels_per_deg`` pixels per degree,
        +x for bend_x and +y (down the rows) for bend_y.
    insertion_mm : float
        Zooms about the image centre by ``1 + cfg.zoom_per_mm * insertion_mm``.
    cfg : ScopeConfig, optional
    Returns
    -------
    numpy.ndarray
        (frame_height, frame_width) uint8.
    """
    cfg = cfg or ScopeConfig()
    scale = max(0.1, 1.0 + cfg.zoom_per_mm * insertion_mm)
    cx = (cfg.frame_width - 1) / 2.0
    cy = (cfg.frame_height - 1) / 2.0
    u = (np.arange(cfg.frame_width) - cx) / scale + cx - cfg.pixels_per_deg * bend_x_deg
    v = (np.arange(cfg.frame_height) - cy) / scale + cy - cfg.pixels_per_deg * bend_y_deg

    image = np.full((cfg.frame_height, cfg.frame_width), 128.0)
    for period, angle, amplitude, phase in GRATINGS:
        k = 2.0 * np.pi / period
        along_u = k * np.cos(np.radians(angle)) * u + phase
        along_v = k * np.sin(np.radians(angle)) * v
        # sin(a + b) split so each grating is two outer products
        image += amplitude * (np.outer(np.cos(along_v), np.sin(along_u))
                              + np.outer(np.sin(along_v), np.cos(along_u)))
    return np.clip(np.rint(image), 0, 255).astype(np.uint8)


def render_frame(state, cfg=None):
    """
    Render the frame for a simulator state.
    Parameters
    ----------
    state : ScopeState
    cfg : ScopeConfig, optional
    Returns
    -------
    FrameSample
    """
    cfg = cfg or ScopeConfig()
    pixels = render_pixels(state.motor_bend_x_deg, state.motor_bend_y_deg,
                           state.motor_feed_deg * cfg.feed_mm_per_deg, cfg)
    return FrameSample(t=state.t, pixels=pixels)
