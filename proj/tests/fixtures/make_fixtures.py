# Copyright 2026 The MMCL Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the committed IO fixtures with nothing but the struct module.

The text-feature pair mimics what the Python exporter writes: a float32
container with one row per id and a newline-separated id list.
"""

import json
import math
import pathlib
import struct

HERE = pathlib.Path(__file__).resolve().parent


def container(dtype_code, dims, values):
    fmt = "<f" if dtype_code == 1 else "<d"
    out = b"MMCT" + struct.pack("<I", 1) + struct.pack("<BB", dtype_code, len(dims))
    out += b"".join(struct.pack("<Q", d) for d in dims)
    return out + b"".join(struct.pack(fmt, v) for v in values)


TEXT_IDS = ["clip_a", "clip_b", "clip_c"]
TEXT_ROWS = [
    [3.0, 4.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 1.0, 1.0, 2.0, 2.0],
    [0.0, 0.0, -2.0, 0.0, 0.0, 0.5],
]


def skeleton(k):
    frames, joints = 4, 10
    return [0.1 * k + 0.01 * t + 0.001 * j + 0.0001 * a
            for t in range(frames) for j in range(joints) for a in range(3)]


def main():
    flat = [v for row in TEXT_ROWS for v in row]
    (HERE / "text_features.mmct").write_bytes(container(1, [3, 6], flat))
    (HERE / "text_ids.txt").write_text("".join(i + "\n" for i in TEXT_IDS))
    samples = []
    for k, tid in enumerate(TEXT_IDS):
        sid = "s%d" % k
        (HERE / "skeletons" / (sid + ".mmct")).write_bytes(container(2, [4, 10, 3], skeleton(k)))
        samples.append({"id": sid, "label": k % 2, "skeleton": "skeletons/%s.mmct" % sid, "text_id": tid})
    manifest = {"topology": "body10", "class_count": 2, "text_features": "text_features.mmct",
                "text_ids": "text_ids.txt", "samples": samples}
    (HERE / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    assert all(math.isfinite(v) for v in flat)


if __name__ == "__main__":
    main()
