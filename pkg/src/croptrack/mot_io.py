"""File formats: MOT-Challenge text files and the CTEB embedding container.

Detection/result lines are ``frame,id,x,y,w,h,score,-1,-1,-1`` with 1-indexed
frames.  Embeddings travel in a little-endian binary container: the magic
bytes ``CTEB``, a uint32 dimension D, then one record per detection in
detection-file order (uint32 frame, uint32 within-frame index, D float32
values).  A plain-CSV fallback with the same record layout
(``frame,index,v0,...,vD-1``) is accepted transparently for hand-written
fixtures.  All embeddings are unit-normalized on load.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import Box
from .rerank import normalize
from .tracker import Detection, FrameResult

_MAGIC = b"CTEB"


class ParseError(ValueError):
    """A file violated its format; carries path and (1-based) line number."""

    def __init__(self, path: str | Path, line: int | None, reason: str):
        location = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{location}: {reason}")
        self.path = str(path)
        self.line = line
        self.reason = reason


def _parse_rows(path: str | Path, min_fields: int) -> list[tuple[int, list[float], int]]:
    """Yield (frame, fields, line_no) for every non-empty line."""
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < min_fields:
                raise ParseError(
                    path, line_no, f"expected >= {min_fields} fields, got {len(parts)}"
                )
            try:
                fields = [float(p) for p in parts[:10]]
            except ValueError:
                raise ParseError(path, line_no, f"non-numeric field in {line!r}")
            frame = int(fields[0])
            if frame != fields[0] or frame < 1:
                raise ParseError(
                    path, line_no, f"frame must be a positive integer, got {parts[0]}"
                )
            rows.append((frame, fields, line_no))
    return rows


def _validated_box(
    path: str | Path, line_no: int, fields: Sequence[float]
) -> Box:
    x, y, w, h = fields[2:6]
    if w <= 0.0 or h <= 0.0:
        raise ParseError(path, line_no, f"box extents must be positive, got w={w}, h={h}")
    return Box(x, y, w, h)


def load_detections(path: str | Path) -> list[list[tuple[Box, float]]]:
    """Per-frame (box, score) lists; index 0 holds file frame 1."""
    rows = _parse_rows(path, min_fields=7)
    n_frames = max((frame for frame, _, _ in rows), default=0)
    frames: list[list[tuple[Box, float]]] = [[] for _ in range(n_frames)]
    for frame, fields, line_no in rows:
        box = _validated_box(path, line_no, fields)
        score = fields[6]
        if not 0.0 <= score <= 1.0:
            raise ParseError(path, line_no, f"score must be in [0, 1], got {score}")
        frames[frame - 1].append((box, score))
    return frames


def load_ground_truth(path: str | Path) -> list[list[tuple[int, Box]]]:
    """Per-frame (id, box) lists from a ground-truth or results file."""
    rows = _parse_rows(path, min_fields=6)
    n_frames = max((frame for frame, _, _ in rows), default=0)
    frames: list[list[tuple[int, Box]]] = [[] for _ in range(n_frames)]
    for frame, fields, line_no in rows:
        track_id = int(fields[1])
        if track_id != fields[1]:
            raise ParseError(path, line_no, f"track id must be an integer, got {fields[1]}")
        frames[frame - 1].append((track_id, _validated_box(path, line_no, fields)))
    return frames


def write_results(path: str | Path, results: Sequence[FrameResult]) -> None:
    """MOT text output, lines sorted by (frame, id), floats at 6 decimals."""
    lines = []
    for result in results:
        for track_id, box, score in result.entries:
            lines.append(
                (
                    result.frame,
                    track_id,
                    f"{result.frame},{track_id},{box.x:.6f},{box.y:.6f},"
                    f"{box.w:.6f},{box.h:.6f},{score:.6f},-1,-1,-1",
                )
            )
    lines.sort(key=lambda item: (item[0], item[1]))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for _, _, line in lines:
            handle.write(line + "\n")


def write_ground_truth(
    path: str | Path, frames: Sequence[Sequence[tuple[int, Box]]]
) -> None:
    """Ground-truth file with unit visibility flags, 1-indexed frames."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for frame_no, entries in enumerate(frames, start=1):
            for track_id, box in sorted(entries, key=lambda e: e[0]):
                handle.write(
                    f"{frame_no},{track_id},{box.x:.6f},{box.y:.6f},"
                    f"{box.w:.6f},{box.h:.6f},1,-1,-1,-1\n"
                )


def write_detections(
    path: str | Path, frames: Sequence[Sequence[tuple[Box, float]]]
) -> None:
    """Detection file (id column -1), 1-indexed frames."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for frame_no, entries in enumerate(frames, start=1):
            for box, score in entries:
                handle.write(
                    f"{frame_no},-1,{box.x:.6f},{box.y:.6f},"
                    f"{box.w:.6f},{box.h:.6f},{score:.6f},-1,-1,-1\n"
                )


def write_embeddings(
    path: str | Path, frames: Sequence[Sequence[np.ndarray]]
) -> None:
    """Binary CTEB container matching the given per-frame vector lists."""
    dims = {np.asarray(v).shape[0] for frame in frames for v in frame}
    if len(dims) > 1:
        raise ValueError(f"embeddings must share one dimension, got {sorted(dims)}")
    dim = dims.pop() if dims else 0
    with open(path, "wb") as handle:
        handle.write(_MAGIC)
        handle.write(struct.pack("<I", dim))
        for frame_no, vectors in enumerate(frames, start=1):
            for index, vector in enumerate(vectors):
                handle.write(struct.pack("<II", frame_no, index))
                handle.write(
                    np.asarray(vector, dtype="<f4").tobytes()
                )


def load_embeddings(
    path: str | Path, expected_counts: Sequence[int] | None = None
) -> list[list[np.ndarray]]:
    """Per-frame unit-normalized embedding lists from a CTEB or CSV file.

    When expected_counts (detections per frame) is given, the records must
    align with it exactly.
    """
    with open(path, "rb") as handle:
        head = handle.read(4)
    if head == _MAGIC:
        records = _read_binary_embeddings(path)
    else:
        records = _read_csv_embeddings(path)

    n_frames = max((frame for frame, _, _ in records), default=0)
    if expected_counts is not None:
        n_frames = max(n_frames, len(expected_counts))
    frames: list[list[np.ndarray]] = [[] for _ in range(n_frames)]
    for frame, index, vector in records:
        row = frames[frame - 1]
        if index != len(row):
            raise ParseError(
                path,
                None,
                f"record for frame {frame} has index {index}, expected {len(row)}",
            )
        norm = float(np.linalg.norm(vector))
        if norm == 0.0 or not np.isfinite(norm):
            raise ParseError(
                path, None, f"zero or non-finite embedding at frame {frame} index {index}"
            )
        row.append(normalize(vector))

    if expected_counts is not None:
        for frame_no, (count, row) in enumerate(
            zip(expected_counts, frames), start=1
        ):
            if count != len(row):
                raise ParseError(
                    path,
                    None,
                    f"frame {frame_no} has {len(row)} embeddings for {count} detections",
                )
    return frames


def _read_binary_embeddings(path: str | Path) -> list[tuple[int, int, np.ndarray]]:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ParseError(path, None, f"bad magic {raw[:4]!r}, expected {_MAGIC!r}")
    if len(raw) < 8:
        raise ParseError(path, None, "truncated header")
    (dim,) = struct.unpack_from("<I", raw, 4)
    if dim == 0:
        raise ParseError(path, None, "embedding dimension must be positive")
    record_size = 8 + 4 * dim
    body = raw[8:]
    if len(body) % record_size != 0:
        raise ParseError(
            path, None, f"body size {len(body)} is not a multiple of record size {record_size}"
        )
    records = []
    for offset in range(0, len(body), record_size):
        frame, index = struct.unpack_from("<II", body, offset)
        if frame < 1:
            raise ParseError(path, None, f"frame index must be >= 1, got {frame}")
        vector = np.frombuffer(
            body, dtype="<f4", count=dim, offset=offset + 8
        ).astype(np.float64)
        records.append((frame, index, vector))
    return records


def _read_csv_embeddings(path: str | Path) -> list[tuple[int, int, np.ndarray]]:
    records = []
    dim = None
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 3:
                raise ParseError(path, line_no, "expected frame,index,v0,... fields")
            try:
                frame = int(parts[0])
                index = int(parts[1])
                vector = np.asarray([float(p) for p in parts[2:]], dtype=np.float64)
            except ValueError:
                raise ParseError(path, line_no, f"non-numeric field in {line!r}")
            if frame < 1:
                raise ParseError(path, line_no, f"frame index must be >= 1, got {frame}")
            if dim is None:
                dim = vector.shape[0]
            elif vector.shape[0] != dim:
                raise ParseError(
                    path, line_no, f"dimension {vector.shape[0]} differs from {dim}"
                )
            records.append((frame, index, vector))
    return records


def load_detection_bundle(
    det_path: str | Path, emb_path: str | Path | None = None
) -> list[list[Detection]]:
    """Detections plus (optionally) aligned embeddings as Detection frames."""
    raw = load_detections(det_path)
    embeddings = None
    if emb_path is not None:
        embeddings = load_embeddings(emb_path, [len(frame) for frame in raw])
    frames: list[list[Detection]] = []
    for frame_no, entries in enumerate(raw):
        dets = []
        for index, (box, score) in enumerate(entries):
            vector = embeddings[frame_no][index] if embeddings is not None else None
            dets.append(Detection(box=box, score=score, embedding=vector))
        frames.append(dets)
    return frames


def results_to_frames(
    results: Sequence[FrameResult], n_frames: int | None = None
) -> list[list[tuple[int, Box]]]:
    """Reshape FrameResults into the (id, box) frame lists the metrics take."""
    highest = max((r.frame for r in results), default=0)
    total = max(n_frames or 0, highest)
    frames: list[list[tuple[int, Box]]] = [[] for _ in range(total)]
    for result in results:
        frames[result.frame - 1] = [(tid, box) for tid, box, _ in result.entries]
    return frames
