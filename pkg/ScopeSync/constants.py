from enum import unique, Enum


class Constants:
    LOG_FORMAT = '%(asctime)-15s - %(levelname)s - %(funcName)s: %(message)s'
    NS_PER_S = 1_000_000_000
    NS_PER_MS = 1_000_000
    FRAME_WIDTH = 383
    FRAME_HEIGHT = 396
    RATE_ACTION_HZ = 50.0
    RATE_STATE_HZ = 50.0
    RATE_POSE_HZ = 40.0
    RATE_FRAME_HZ = 30.0
    ALIGNED_RATE_HZ = 30.0
    RATE_TOLERANCE = 0.2
    QUAT_TOLERANCE = 1e-9
    QUAT_INPUT_TOLERANCE = 1e-6
    FORMAT_VERSION = '1'
    RECORD_COLUMNS = ['frame_index', 't_ns',
                      'action_bend_x', 'action_bend_y', 'action_insertion', 'action_home',
                      'state_bend_x_deg', 'state_bend_y_deg', 'state_insertion_deg',
                      'pos_x_m', 'pos_y_m', 'pos_z_m',
                      'quat_w', 'quat_x', 'quat_y', 'quat_z',
                      'frame_ref']
    EXIT_OK = 0
    EXIT_USAGE = 2
    EXIT_LOW_CONFIDENCE = 3
    EXIT_DATA = 4


@unique
class Modality(Enum):
    """The four logged streams of the scope."""

    ACTION = "action"
    """Operator command vector (bend_x, bend_y, insertion, home)"""

    STATE = "state"
    """Encoder-derived output shaft angles"""

    POSE = "pose"
    """Tip position and orientation from the tracker"""

    FRAME = "frame"
    """Grayscale video frames"""


@unique
class ResampleMethod(Enum):
    LINEAR = "linear"
    SLERP = "slerp"
    HOLD = "hold"
    NEAREST = "nearest"


@unique
class Axis(Enum):
    BEND_X = "bend_x"
    BEND_Y = "bend_y"
    INSERTION = "insertion"
