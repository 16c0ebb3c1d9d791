"""
Reduced-fidelity body configurations for the synthetic data generator.

Joint layout follows the 20-joint Kinect v1 ordering.  World axes: x points
to the subject's right, y up, z forward.  Every pose is expressed with the
hip-center joint at the origin; the generator adds subject scale, placement
and noise.

Semantic poses (symbol -> description):

    T1   arms beside the body (rest)
    T2   arms overhead
    T3   knees bent, torso slightly forward
    T4   right forearm across the stomach
    T5   right arm outstretched to the right
    T6   both arms outstretched sideways
    T7   both forearms in front of the stomach
    T8   both arms outstretched in front
    T9   torso parallel to the floor, arms hanging
    T10  left knee raised, thigh horizontal
    T11  right leg raised and outstretched forward
    T12  legs spread wide
"""
from __future__ import annotations

import numpy as np

JOINT_NAMES = (
    "hip_center", "spine", "shoulder_center", "head",
    "shoulder_left", "elbow_left", "wrist_left", "hand_left",
    "shoulder_right", "elbow_right", "wrist_right", "hand_right",
    "hip_left", "knee_left", "ankle_left", "foot_left",
    "hip_right", "knee_right", "ankle_right", "foot_right",
)
ROOT_JOINT = 0
SCALE_PAIR = (0, 1)
REST = "T1"

UPPER_ARM, FOREARM, HAND = 0.28, 0.26, 0.08
THIGH, SHIN = 0.44, 0.42

DOWN = (0.0, -1.0, 0.0)
UP = (0.0, 1.0, 0.0)
FWD = (0.0, 0.0, 1.0)
RIGHT = (1.0, 0.0, 0.0)
LEFT = (-1.0, 0.0, 0.0)


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def _pitch(points, angle):
    """Rotate about the x axis so that +y tips towards +z."""
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[1, 0, 0], [0, c, s], [0, -s, c]], dtype=np.float64)
    return points @ rot


def body(
    left_arm=((-0.1, -1, 0), DOWN),
    right_arm=((0.1, -1, 0), DOWN),
    left_leg=(DOWN, DOWN),
    right_leg=(DOWN, DOWN),
    torso_pitch: float = 0.0,
) -> np.ndarray:
    """Assemble a (20, 3) skeleton from segment directions given in world axes."""
    torso = _pitch(
        np.array([
            [0.0, 0.25, 0.0],     # spine
            [0.0, 0.50, 0.0],     # shoulder center
            [0.0, 0.70, 0.0],     # head
            [-0.18, 0.47, 0.0],   # shoulder left
            [0.18, 0.47, 0.0],    # shoulder right
        ]),
        torso_pitch,
    )
    j = np.zeros((20, 3))
    j[1], j[2], j[3], j[4], j[8] = torso

    for shoulder, (upper, fore) in ((4, left_arm), (8, right_arm)):
        elbow = j[shoulder] + UPPER_ARM * _unit(upper)
        wrist = elbow + FOREARM * _unit(fore)
        j[shoulder + 1] = elbow
        j[shoulder + 2] = wrist
        j[shoulder + 3] = wrist + HAND * _unit(fore)

    for hip_x, (thigh, shin), first in ((-0.1, left_leg, 12), (0.1, right_leg, 16)):
        hip = np.array([hip_x, -0.05, 0.0])
        knee = hip + THIGH * _unit(thigh)
        ankle = knee + SHIN * _unit(shin)
        j[first] = hip
        j[first + 1] = knee
        j[first + 2] = ankle
        j[first + 3] = ankle + np.array([0.0, -0.04, 0.09])
    return j


def canonical_poses() -> dict[str, np.ndarray]:
    stomach_r = ((0.1, -0.9, 0.4), (-0.9, 0.0, 0.45))
    return {
        "T1": body(),
        "T2": body(left_arm=((-0.15, 1, 0), UP), right_arm=((0.15, 1, 0), UP)),
        "T3": body(
            left_leg=((0, -0.6, 0.8), (0, -0.8, -0.6)),
            right_leg=((0, -0.6, 0.8), (0, -0.8, -0.6)),
            torso_pitch=0.3,
        ),
        "T4": body(right_arm=stomach_r),
        "T5": body(right_arm=(RIGHT, RIGHT)),
        "T6": body(left_arm=(LEFT, LEFT), right_arm=(RIGHT, RIGHT)),
        "T7": body(left_arm=((-0.1, -0.9, 0.4), (0.7, 0.0, 0.7)), right_arm=((0.1, -0.9, 0.4), (-0.7, 0.0, 0.7))),
        "T8": body(left_arm=(FWD, FWD), right_arm=(FWD, FWD)),
        "T9": body(left_arm=(DOWN, DOWN), right_arm=(DOWN, DOWN), torso_pitch=np.pi / 2),
        "T10": body(left_leg=(FWD, DOWN)),
        "T11": body(right_leg=((0, -0.5, 0.87), (0, -0.5, 0.87))),
        "T12": body(left_leg=((-0.5, -0.87, 0), (-0.5, -0.87, 0)), right_leg=((0.5, -0.87, 0), (0.5, -0.87, 0))),
    }


# Every sentence starts and ends at rest.  No two poses occur in exactly the
# same set of classes, with or without the held-out pair below; poses that
# always co-occur get identical translation rows and cannot be told apart.
CLASSES = {
    "jumping_jack": ("T1", "T12", "T6", "T2", "T1"),
    "step_push": ("T1", "T10", "T4", "T5", "T1"),
    "change_weapon": ("T1", "T4", "T7", "T1"),
    "squat": ("T1", "T6", "T3", "T8", "T1"),
    "bow": ("T1", "T12", "T9", "T1"),
    "kick": ("T1", "T3", "T10", "T11", "T1"),
    "curl_press": ("T1", "T7", "T2", "T1"),
    "duck": ("T1", "T3", "T1"),
}

# Held-out singles only use poses that some remaining class also uses.
ZERO_SHOT_HELDOUT = ("curl_press", "duck")
ZERO_SHOT_COMPOSITES = (("jumping_jack", "squat"), ("bow", "kick"))


def composite_label(a: str, b: str) -> str:
    return f"{a} then {b}"
