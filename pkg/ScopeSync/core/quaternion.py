"""Unit quaternion helpers, storage order (w, x, y, z)."""
import numpy as np

from ..constants import Constants
from ..exceptions import InvalidArgumentError

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

# Above this dot product the arc is short enough for normalized lerp.
_NLERP_DOT = 0.9995
_ANTIPODAL_TOL = 1e-6


def _as_quat(q, name):
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise InvalidArgumentError(f'{name} must have 4 components, got shape {q.shape}')
    if not np.all(np.isfinite(q)):
        raise InvalidArgumentError(f'{name} has non-finite components: {q}')
    return q


def quat_normalize(q):
    q = _as_quat(q, 'q')
    norm = np.linalg.norm(q)
    if norm == 0:
        raise InvalidArgumentError('cannot normalize a zero quaternion')
    return q / norm


def quat_multiply(q0, q1):
    """Hamilton product q0 * q1."""
    w0, x0, y0, z0 = q0
    w1, x1, y1, z1 = q1
    return np.array([
        w0 * w1 - x0 * x1 - y0 * y1 - z0 * z1,
        w0 * x1 + x0 * w1 + y0 * z1 - z0 * y1,
        w0 * y1 - x0 * z1 + y0 * w1 + z0 * x1,
        w0 * z1 + x0 * y1 - y0 * x1 + z0 * w1,
    ])


def quat_conjugate(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm == 0:
        return IDENTITY.copy()
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis / norm))


def quat_from_two_vectors(a, b):
    """Shortest rotation taking direction ``a`` onto direction ``b``."""
    a = np.asarray(a, dtype=float) / np.linalg.norm(a)
    b = np.asarray(b, dtype=float) / np.linalg.norm(b)
    dot = float(np.dot(a, b))
    if dot < -1.0 + 1e-12:
        # 180 degrees: any axis orthogonal to a
        helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        return quat_from_axis_angle(np.cross(a, helper), np.pi)
    q = np.concatenate(([1.0 + dot], np.cross(a, b)))
    return q / np.linalg.norm(q)


def quat_to_matrix(q):
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_angle(q0, q1):
    """Rotation angle in radians between the rotations of q0 and q1."""
    dot = abs(float(np.dot(quat_normalize(q0), quat_normalize(q1))))
    return 2.0 * np.arccos(min(1.0, dot))


def quat_slerp(q0, q1, u):
    """
    Shortest-arc spherical linear interpolation.
    Parameters
    ----------
    q0, q1 : array-like of 4 float
        Unit quaternions (w, x, y, z), unit within 1e-6.
    u : float
        Fraction in [0, 1].
    Returns
    -------
    numpy.ndarray
        Unit quaternion. ``u == 0`` gives q0 and ``u == 1`` gives q1 up to sign.
    Notes
    -----
    q1 is negated when dot(q0, q1) < 0. When the two rotations are half a turn
    apart (|dot| < 1e-6) both signs are equally short; the sign is then fixed
    so the relative rotation turns positively about q0's x-axis (then y, z).
    The path is the half turn about that fixed axis of q0's frame.
    """
    q0 = _as_quat(q0, 'q0')
    q1 = _as_quat(q1, 'q1')
    if not np.isfinite(u):
        raise InvalidArgumentError(f'u must be finite, got {u}')
    if not 0.0 <= u <= 1.0:
        raise InvalidArgumentError(f'u must lie in [0, 1], got {u}')
    for name, q in (('q0', q0), ('q1', q1)):
        if abs(np.linalg.norm(q) - 1.0) > Constants.QUAT_INPUT_TOLERANCE:
            raise InvalidArgumentError(f'{name} is not unit norm: {np.linalg.norm(q)}')
    q0 = q0 / np.linalg.norm(q0)
    q1 = q1 / np.linalg.norm(q1)

    dot = float(np.dot(q0, q1))
    if abs(dot) < _ANTIPODAL_TOL:
        relative = quat_multiply(quat_conjugate(q0), q1)
        for component in relative[1:]:
            if abs(component) > _ANTIPODAL_TOL:
                if component < 0:
                    q1 = -q1
                break
        dot = float(np.dot(q0, q1))
    elif dot < 0.0:
        q1 = -q1
        dot = -dot

    if u == 0.0:
        return q0
    if u == 1.0:
        return q1

    if dot > _NLERP_DOT:
        result = q0 + u * (q1 - q0)
    else:
        theta = np.arccos(min(1.0, dot))
        sin_theta = np.sin(theta)
        result = (np.sin((1.0 - u) * theta) / sin_theta) * q0 + (np.sin(u * theta) / sin_theta) * q1
    return result / np.linalg.norm(result)
