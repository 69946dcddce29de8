"""SE(3) pose algebra, 6D continuous rotation encoding, and relative actions.

Rotations are stored as full 3x3 matrices internally; the 6-number encoding
(first two matrix columns, column-major) appears only at the serialization
boundary. Action vectors are laid out ``[x, y, z, r6[0..6]]`` per pose,
translation in meters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHONORMAL_TOL = 1e-9
DEGENERACY_TOL = 1e-12

POSE_VECTOR_DIM = 9


class DegenerateRotationError(ValueError):
    """6D encoding cannot be orthogonalized (zero or parallel columns)."""


class InvalidRotationError(ValueError):
    """Matrix is not a proper rotation within tolerance."""


def _check_rotation_matrix(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise InvalidRotationError(f"rotation matrix must be 3x3, got {m.shape}")
    err = np.linalg.norm(m.T @ m - np.eye(3))
    if err >= ORTHONORMAL_TOL:
        raise InvalidRotationError(f"matrix is not orthonormal (||R^T R - I||_F = {err:.3e})")
    det = np.linalg.det(m)
    if abs(det - 1.0) >= ORTHONORMAL_TOL:
        raise InvalidRotationError(f"matrix is not proper (det = {det!r})")
    return m


@dataclass(frozen=True)
class Rotation3:
    """Proper orthonormal 3x3 rotation matrix."""

    m: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", _check_rotation_matrix(self.m))

    @staticmethod
    def identity() -> "Rotation3":
        return Rotation3(np.eye(3))


@dataclass(frozen=True)
class Rotation6:
    """First two columns of a rotation matrix, column-major: v = [a1, a2]."""

    v: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.v, dtype=np.float64).reshape(-1)
        if v.shape != (6,):
            raise ValueError(f"6D rotation encoding must have 6 entries, got {v.shape}")
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class Pose:
    """SE(3) element: rotation plus translation in meters."""

    rotation: Rotation3
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        t = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        if t.shape != (3,):
            raise ValueError(f"translation must have 3 entries, got {t.shape}")
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Pose":
        return Pose(Rotation3.identity(), np.zeros(3))


def encode_6d(r: Rotation3) -> Rotation6:
    """Encode a rotation as its first two columns (continuous, no branch cuts)."""
    return Rotation6(np.concatenate([r.m[:, 0], r.m[:, 1]]))


def gram_schmidt_decode(r6: Rotation6) -> Rotation3:
    """Decode a 6D encoding by orthogonalizing its two columns.

    b1 = a1/|a1|; b2 = normalize(a2 - (b1.a2) b1); b3 = b1 x b2.
    """
    a1, a2 = r6.v[:3], r6.v[3:]
    n1 = np.linalg.norm(a1)
    if n1 < DEGENERACY_TOL:
        raise DegenerateRotationError("first encoded column has (near-)zero norm")
    b1 = a1 / n1
    resid = a2 - (b1 @ a2) * b1
    n2 = np.linalg.norm(resid)
    if n2 < DEGENERACY_TOL:
        raise DegenerateRotationError("second encoded column is (near-)parallel to the first")
    b2 = resid / n2
    b3 = np.cross(b1, b2)
    return Rotation3(np.stack([b1, b2, b3], axis=1))


def compose(a: Pose, b: Pose) -> Pose:
    """Group operation: rotation Ra.Rb, translation Ra.tb + ta."""
    return Pose(
        Rotation3(a.rotation.m @ b.rotation.m),
        a.rotation.m @ b.translation + a.translation,
    )


def inverse(a: Pose) -> Pose:
    """Group inverse: rotation Ra^T, translation -Ra^T.ta."""
    rt = a.rotation.m.T
    return Pose(Rotation3(rt), -rt @ a.translation)


def relative_action(t_ref: Pose, t_t: Pose) -> Pose:
    """Express ``t_t`` relative to the anchor pose: inverse(t_ref) composed with t_t."""
    return compose(inverse(t_ref), t_t)


def absolute_from_relative(t_ref: Pose, rel: Pose) -> Pose:
    """Inverse map of :func:`relative_action`: compose(t_ref, rel)."""
    return compose(t_ref, rel)


def pose_to_vector(p: Pose) -> np.ndarray:
    """Flatten a pose to the canonical 9-vector [x, y, z, r6]."""
    return np.concatenate([p.translation, encode_6d(p.rotation).v])


def pose_from_vector(v: np.ndarray) -> Pose:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape != (POSE_VECTOR_DIM,):
        raise ValueError(f"pose vector must have {POSE_VECTOR_DIM} entries, got {v.shape}")
    return Pose(gram_schmidt_decode(Rotation6(v[3:])), v[:3])


def relative_action_vectors(anchor: np.ndarray, poses: np.ndarray) -> np.ndarray:
    """Batch form of :func:`relative_action` over (T, 9) pose-vector rows.

    ``anchor`` is a single 9-vector; each output row encodes the input row's
    pose relative to it.
    """
    poses = np.asarray(poses, dtype=np.float64)
    if poses.ndim != 2 or poses.shape[1] != POSE_VECTOR_DIM:
        raise ValueError(f"expected (T, {POSE_VECTOR_DIM}) pose rows, got {poses.shape}")
    ref = pose_from_vector(anchor)
    out = np.empty_like(poses)
    for i, row in enumerate(poses):
        out[i] = pose_to_vector(relative_action(ref, pose_from_vector(row)))
    return out
