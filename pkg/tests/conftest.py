import json
from pathlib import Path

import numpy as np

from foundry.geometry import Pose, Rotation3, pose_to_vector
from foundry.shardstore.payload import encode_array


def random_pose_vector(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return pose_to_vector(Pose(Rotation3(q), rng.normal(scale=0.3, size=3)))


def write_corpus(
    root: Path,
    n_episodes: int,
    min_len: int = 4,
    max_len: int = 10,
    seed: int = 0,
    cameras: tuple[str, ...] = ("camera1",),
    task: str = "stack the plates",
) -> dict[str, int]:
    """Generic-episode corpus: eepose (T,9) pose rows + jointpos (T,7) + blobs.

    Returns episode id -> length.
    """
    rng = np.random.default_rng(seed)
    lengths = {}
    for i in range(n_episodes):
        eid = f"ep{i:04d}"
        length = int(rng.integers(min_len, max_len + 1))
        lengths[eid] = length
        ep_dir = root / eid
        ep_dir.mkdir(parents=True)
        (ep_dir / "episode.json").write_text(json.dumps({"id": eid, "task": task}))
        poses = np.stack([random_pose_vector(rng) for _ in range(length)])
        joints = rng.normal(size=(length, 7))
        (ep_dir / "eepose.bin").write_bytes(encode_array(poses))
        (ep_dir / "jointpos.bin").write_bytes(encode_array(joints))
        for cam in cameras:
            cam_dir = ep_dir / cam
            cam_dir.mkdir()
            for t in range(length):
                (cam_dir / f"{t:06d}.jpg").write_bytes(f"jpeg:{eid}:{cam}:{t}".encode())
    return lengths
