"""Rotation algebra on SO(3).

All rotations are stored body-to-inertial (``R`` maps body vectors into the
inertial frame), so the thrust direction in the inertial frame is ``R @ e3``.
"""

from __future__ import annotations

import numpy as np

SKEW_TOL = 1e-9


def hat(v) -> np.ndarray:
    """Skew-symmetric matrix with ``hat(v) @ w == cross(v, w)``."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(M, tol: float = SKEW_TOL) -> np.ndarray:
    """Inverse of :func:`hat`. Rejects matrices that are not antisymmetric."""
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError(f"vee expects a 3x3 matrix, got shape {M.shape}")
    sym = 0.5 * (M + M.T)
    if np.linalg.norm(sym) > tol:
        raise ValueError(f"matrix is not antisymmetric (|sym part| = {np.linalg.norm(sym):.3e})")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def vee_antisym(M) -> np.ndarray:
    """vee of the antisymmetric part of ``M``; no tolerance check."""
    M = np.asarray(M, dtype=float)
    return 0.5 * np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]])


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def inertial_to_body(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Frame-change matrix from inertial to body coordinates.

    Product of the three elementary frame rotations about x (roll), y (pitch)
    and z (yaw), in that order.
    """
    cf, sf = np.cos(roll), np.sin(roll)
    ct, st = np.cos(pitch), np.sin(pitch)
    cp, sp = np.cos(yaw), np.sin(yaw)
    return np.array(
        [
            [cp * ct, ct * sp, -st],
            [cp * sf * st - cf * sp, cf * cp + sf * st * sp, sf * ct],
            [sf * sp + cf * cp * st, cf * st * sp - cp * sf, cf * ct],
        ]
    )


def euler_to_rotation(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Body-to-inertial rotation for the given roll, pitch and yaw (radians)."""
    return inertial_to_body(roll, pitch, yaw).T


def rotation_to_euler(R) -> tuple[float, float, float]:
    """Inverse of :func:`euler_to_rotation` for pitch in (-pi/2, pi/2)."""
    B = np.asarray(R, dtype=float).T
    pitch = float(np.arcsin(np.clip(-B[0, 2], -1.0, 1.0)))
    roll = float(np.arctan2(B[1, 2], B[2, 2]))
    yaw = float(np.arctan2(B[0, 1], B[0, 0]))
    return roll, pitch, yaw


def expm_so3(w) -> np.ndarray:
    """Rodrigues formula: rotation by angle ``|w|`` about ``w/|w|``."""
    w = np.asarray(w, dtype=float)
    theta = float(np.linalg.norm(w))
    K = hat(w)
    if theta < 1e-12:
        return np.eye(3) + K
    return np.eye(3) + np.sin(theta) / theta * K + (1.0 - np.cos(theta)) / theta**2 * (K @ K)


def attitude_error_value(R, R_d) -> float:
    """Configuration error 0.5 * tr(I - R_d^T R), in [0, 2]."""
    R = np.asarray(R, dtype=float)
    R_d = np.asarray(R_d, dtype=float)
    # tr(R_d^T R) == sum of the elementwise product
    return 0.5 * (3.0 - float(np.sum(R_d * R)))


def attitude_error(R, R_d) -> np.ndarray:
    """Attitude tracking error 0.5 * vee(R_d^T R - R^T R_d)."""
    R = np.asarray(R, dtype=float)
    R_d = np.asarray(R_d, dtype=float)
    E = R_d.T @ R
    return 0.5 * np.array([E[2, 1] - E[1, 2], E[0, 2] - E[2, 0], E[1, 0] - E[0, 1]])


def angvel_error(omega, R, R_d, omega_d) -> np.ndarray:
    """Body-frame angular velocity error omega - R^T R_d omega_d."""
    R = np.asarray(R, dtype=float)
    return np.asarray(omega, dtype=float) - R.T @ (np.asarray(R_d, dtype=float) @ np.asarray(omega_d, dtype=float))


def is_rotation(R, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return bool(np.linalg.norm(R @ R.T - np.eye(3)) <= tol and abs(np.linalg.det(R) - 1.0) <= tol)


def reorthonormalize(M) -> np.ndarray:
    """Nearest rotation in Frobenius norm (polar factor via SVD)."""
    M = np.asarray(M, dtype=float)
    U, _, Vt = np.linalg.svd(M)
    Q = U @ Vt
    if np.linalg.det(Q) <= 0.0:
        raise ValueError("matrix has non-positive determinant; no nearby rotation")
    return Q
