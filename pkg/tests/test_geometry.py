import numpy as np
import pytest

from foundry.geometry import (
    DegenerateRotationError,
    Pose,
    Rotation3,
    Rotation6,
    absolute_from_relative,
    compose,
    encode_6d,
    gram_schmidt_decode,
    inverse,
    pose_from_vector,
    pose_to_vector,
    relative_action,
    relative_action_vectors,
)


def random_rotation(rng: np.random.Generator) -> Rotation3:
    # QR of a Gaussian matrix, sign-fixed to det +1.
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return Rotation3(q)


def random_pose(rng: np.random.Generator) -> Pose:
    return Pose(random_rotation(rng), rng.normal(scale=0.5, size=3))


def frob(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b))


def test_encode_identity():
    assert np.allclose(encode_6d(Rotation3.identity()).v, [1, 0, 0, 0, 1, 0])


def test_encode_z90():
    r = Rotation3(np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
    assert np.allclose(encode_6d(r).v, [0, 1, 0, -1, 0, 0])


def test_decode_identity():
    r = gram_schmidt_decode(Rotation6(np.array([1.0, 0, 0, 0, 1.0, 0])))
    assert frob(r.m, np.eye(3)) < 1e-12


def test_decode_unnormalized_orthogonal():
    # Columns (0,2,0) and (-3,0,0) normalize to a 90 degree rotation about z.
    r = gram_schmidt_decode(Rotation6(np.array([0.0, 2.0, 0.0, -3.0, 0.0, 0.0])))
    expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert frob(r.m, expected) < 1e-12


def test_decode_degenerate_zero_column():
    with pytest.raises(DegenerateRotationError):
        gram_schmidt_decode(Rotation6(np.array([0.0, 0, 0, 0, 1.0, 0])))


def test_decode_degenerate_parallel_columns():
    with pytest.raises(DegenerateRotationError):
        gram_schmidt_decode(Rotation6(np.array([1.0, 0, 0, 2.0, 0, 0])))


def test_round_trip_random_rotations():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        r = random_rotation(rng)
        back = gram_schmidt_decode(encode_6d(r))
        assert frob(back.m, r.m) < 1e-9


def test_decode_output_is_valid_rotation():
    # Rotation3.__post_init__ enforces the orthonormal/proper invariants.
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 100_000:
        v = rng.normal(size=6)
        if np.linalg.norm(v[:3]) < 1e-6:
            continue
        gram_schmidt_decode(Rotation6(v))
        checked += 1


def test_encoding_continuity():
    # Nearby rotations have nearby encodings: the encoding is a sub-matrix,
    # so ||encode(R) - encode(R')|| <= ||R - R'||_F.
    rng = np.random.default_rng(3)
    for _ in range(200):
        r = random_rotation(rng)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        eps = 1e-6
        k = np.array(
            [
                [0, -axis[2], axis[1]],
                [axis[2], 0, -axis[0]],
                [-axis[1], axis[0], 0],
            ]
        )
        r2 = Rotation3(r.m @ (np.eye(3) + np.sin(eps) * k + (1 - np.cos(eps)) * (k @ k)))
        d_mat = frob(r.m, r2.m)
        d_enc = float(np.linalg.norm(encode_6d(r).v - encode_6d(r2).v))
        assert d_enc <= d_mat + 1e-15


def test_compose_identity():
    rng = np.random.default_rng(5)
    b = random_pose(rng)
    c = compose(Pose.identity(), b)
    assert frob(c.rotation.m, b.rotation.m) < 1e-12
    assert frob(c.translation, b.translation) < 1e-12


def test_inverse_identity():
    inv = inverse(Pose.identity())
    assert frob(inv.rotation.m, np.eye(3)) < 1e-12
    assert frob(inv.translation, np.zeros(3)) < 1e-12


def test_compose_inverse_is_identity():
    rng = np.random.default_rng(13)
    for _ in range(100):
        a = random_pose(rng)
        ident = compose(inverse(a), a)
        assert frob(ident.rotation.m, np.eye(3)) < 1e-9
        assert frob(ident.translation, np.zeros(3)) < 1e-9


def test_relative_action_same_pose_is_identity():
    rng = np.random.default_rng(17)
    a = random_pose(rng)
    rel = relative_action(a, a)
    assert frob(rel.rotation.m, np.eye(3)) < 1e-9
    assert frob(rel.translation, np.zeros(3)) < 1e-9


def test_relative_action_identity_ref():
    rng = np.random.default_rng(19)
    t = random_pose(rng)
    rel = relative_action(Pose.identity(), t)
    assert frob(rel.rotation.m, t.rotation.m) < 1e-12
    assert frob(rel.translation, t.translation) < 1e-12


def test_relative_round_trip():
    rng = np.random.default_rng(23)
    for _ in range(200):
        ref, t = random_pose(rng), random_pose(rng)
        back = absolute_from_relative(ref, relative_action(ref, t))
        assert frob(back.rotation.m, t.rotation.m) < 1e-9
        assert frob(back.translation, t.translation) < 1e-9


def test_relative_action_left_equivariance():
    # relative_action(g.a, g.b) == relative_action(a, b) for any pose g.
    rng = np.random.default_rng(29)
    for _ in range(100):
        g, a, b = random_pose(rng), random_pose(rng), random_pose(rng)
        lhs = relative_action(compose(g, a), compose(g, b))
        rhs = relative_action(a, b)
        assert frob(lhs.rotation.m, rhs.rotation.m) < 1e-9
        assert frob(lhs.translation, rhs.translation) < 1e-9


def test_pose_vector_round_trip():
    rng = np.random.default_rng(31)
    for _ in range(100):
        p = random_pose(rng)
        back = pose_from_vector(pose_to_vector(p))
        assert frob(back.rotation.m, p.rotation.m) < 1e-9
        assert frob(back.translation, p.translation) < 1e-9


def test_relative_action_vectors_matches_scalar_path():
    rng = np.random.default_rng(37)
    anchor = random_pose(rng)
    rows = np.stack([pose_to_vector(random_pose(rng)) for _ in range(16)])
    batch = relative_action_vectors(pose_to_vector(anchor), rows)
    for i in range(16):
        single = pose_to_vector(relative_action(anchor, pose_from_vector(rows[i])))
        assert np.allclose(batch[i], single, atol=1e-12)
