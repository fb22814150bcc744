"""Task names and default compute latencies."""

from __future__ import annotations

from ..core import NS_PER_MS, NS_PER_US

XR_BASE_TASKS = (
    "imu_integration",
    "vio",
    "hand_tracking",
    "ws_client_send",
    "ws_client_recv",
    "transform_listener",
    "pointcloud_update",
    "scene_reconstruction",
    "atw",
    "frame_submit",
)
AGENT_BASE_TASKS = (
    "rosbridge_server",
    "state_publisher",
    "ik_solver",
    "transform_compress",
    "visual_slam",
    "cam_feed",
)
XR_DUO_TASKS = ("local_ik_predict", "object_predict", "calibration_merge")
AGENT_DUO_TASKS = ("calibration_send",)

ALL_TASKS = XR_BASE_TASKS + AGENT_BASE_TASKS + XR_DUO_TASKS + AGENT_DUO_TASKS

DEFAULT_EXEC_NS = {
    "imu_integration": 200 * NS_PER_US,
    "vio": 5 * NS_PER_MS,
    "hand_tracking": 8 * NS_PER_MS,
    "ws_client_send": 500 * NS_PER_US,
    "ws_client_recv": 500 * NS_PER_US,
    "transform_listener": 1 * NS_PER_MS,
    "pointcloud_update": 3 * NS_PER_MS,
    "scene_reconstruction": 4 * NS_PER_MS,
    "atw": 1 * NS_PER_MS,
    "frame_submit": 0,
    "rosbridge_server": 1 * NS_PER_MS,
    "state_publisher": 1 * NS_PER_MS,
    "ik_solver": 8 * NS_PER_MS,
    "transform_compress": 2 * NS_PER_MS,
    "visual_slam": 30 * NS_PER_MS,
    "cam_feed": 500 * NS_PER_US,
    "local_ik_predict": 8 * NS_PER_MS,
    "object_predict": 200 * NS_PER_US,
    "calibration_merge": 500 * NS_PER_US,
    "calibration_send": 500 * NS_PER_US,
}

DEFAULT_CAMERA_RATE_HZ = 30.0
DEFAULT_SLAM_RATE_HZ = 30.0
