from .arena import Arena, LidarConfig, validation_arena, wrap_angle
from .env import (
    COLLISION,
    OUT_OF_BOUNDS,
    RUNNING,
    STACK_DEPTH,
    SUCCESS,
    TIMEOUT,
    DroneState,
    Episode,
    Observation,
    SimConfig,
    StepOutcome,
)
from .lidar import depth_image, lidar_scan, observe_depth, ray_distances_2d
