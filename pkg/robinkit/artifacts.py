"""
Artifact I/O for robinkit.
Run-length encoded voxel masks, the flat binary field layout, CSV exports,
JSON documents and run manifests with input digests.
"""

import base64
import csv
import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Type, TypeVar

import numpy as np
from pydantic import BaseModel, TypeAdapter

from robinkit import __version__
from robinkit.errors import GeometryError
from robinkit.geometry import VoxelDomain
from robinkit.models import DomainDocument, RunManifest, VerificationReport, VoxelDocument

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

FIELD_HEADER_BYTES = 3 * 8 + 3 * 8 + 8


def encode_mask(mask: np.ndarray) -> str:
    """Base64 of little-endian uint32 run lengths over the C-order flattening, first run False."""
    flat = np.asarray(mask, dtype=bool).ravel()
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs = np.diff(bounds)
    if flat.size and flat[0]:
        runs = np.concatenate([[0], runs])
    return base64.b64encode(runs.astype("<u4").tobytes()).decode("ascii")


def decode_mask(encoded: str, shape: Sequence[int]) -> np.ndarray:
    runs = np.frombuffer(base64.b64decode(encoded), dtype="<u4").astype(np.int64)
    size = int(np.prod(shape))
    if int(runs.sum()) != size:
        raise GeometryError(f"mask runs cover {int(runs.sum())} cells, expected {size}")
    values = np.arange(len(runs)) % 2 == 1
    return np.repeat(values, runs).reshape(tuple(shape))


def encode_voxel_domain(domain: VoxelDomain) -> VoxelDocument:
    return VoxelDocument(
        origin=domain.origin.tolist(),
        h=domain.h,
        shape=domain.shape,
        occupancy=encode_mask(domain.occupancy),
        dirichlet=encode_mask(domain.dirichlet),
    )


def decode_voxel_document(doc: VoxelDocument) -> VoxelDomain:
    shape = tuple(doc.shape)
    return VoxelDomain(
        origin=doc.origin.array(),
        h=doc.h,
        occupancy=decode_mask(doc.occupancy, shape),
        dirichlet=decode_mask(doc.dirichlet, (6,) + shape),
    )


def write_field_binary(path: Path, domain: VoxelDomain, box: np.ndarray):
    """
    Header: 3 x int64 dims, 3 x float64 origin, float64 h (little endian).
    Payload: float64 values over the whole box in x-fastest order, NaN outside D.
    """
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(np.asarray(domain.shape, dtype="<i8").tobytes())
        fh.write(np.asarray(domain.origin, dtype="<f8").tobytes())
        fh.write(np.asarray([domain.h], dtype="<f8").tobytes())
        fh.write(np.asarray(box, dtype="<f8").ravel(order="F").tobytes())
    logger.info(f"Wrote field {domain.shape} to {path}")


def read_field_binary(path: Path) -> Tuple[Tuple[int, int, int], np.ndarray, float, np.ndarray]:
    raw = Path(path).read_bytes()
    dims = tuple(int(v) for v in np.frombuffer(raw, dtype="<i8", count=3))
    origin = np.frombuffer(raw, dtype="<f8", count=3, offset=24).copy()
    h = float(np.frombuffer(raw, dtype="<f8", count=1, offset=48)[0])
    payload = np.frombuffer(raw, dtype="<f8", offset=FIELD_HEADER_BYTES)
    if payload.size != int(np.prod(dims)):
        raise GeometryError(f"field payload has {payload.size} values, header announces {dims}")
    return dims, origin, h, payload.reshape(dims, order="F")


def write_field_csv(path: Path, domain: VoxelDomain, values: np.ndarray):
    """One row per occupied cell: i, j, k, value."""
    idx = np.array(np.nonzero(domain.occupancy)).T
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "k", "value"])
        for (i, j, k), value in zip(idx, values):
            writer.writerow([int(i), int(j), int(k), repr(float(value))])


REPORT_COLUMNS = ["case", "lhs", "rhs", "slack", "error_bar", "holds", "slack_with_corrections", "cross_check"]


def report_row(report: VerificationReport) -> List[Any]:
    data = report.model_dump()
    return [data[col] for col in REPORT_COLUMNS]


def write_rows_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(list(row))


def write_reports_csv(path: Path, reports: Iterable[VerificationReport]):
    write_rows_csv(path, REPORT_COLUMNS, (report_row(r) for r in reports))


def to_jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json", by_alias=True)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def write_json(path: Path, payload: Dict[str, Any]):
    Path(path).write_text(json.dumps(to_jsonable(payload), indent=2))
    logger.info(f"Wrote {path}")


def read_json(path: Path) -> Any:
    return json.loads(Path(path).read_text())


def load_model(path: Path, model: Type[ModelT]) -> ModelT:
    """Parse a JSON document into a model; pydantic ValidationError propagates."""
    return model.model_validate_json(Path(path).read_text())


def load_domain_document(path: Path):
    """A ball or voxel document, told apart by its "type" key."""
    return TypeAdapter(DomainDocument).validate_json(Path(path).read_text())


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_manifest(
    subcommand: str,
    parameters: Dict[str, Any],
    inputs: Iterable[Path],
    started_at: datetime,
    finished_at: Optional[datetime] = None,
) -> RunManifest:
    finished_at = finished_at or datetime.now(timezone.utc)
    return RunManifest(
        subcommand=subcommand,
        parameters=to_jsonable(parameters),
        input_digests={str(p): file_digest(p) for p in inputs},
        version=__version__,
        started_at=started_at.isoformat(),
        wall_time_s=(finished_at - started_at).total_seconds(),
    )
