"""
Flat-file formats: distribution / latent / OOS / embedding / result JSON, the
plain-text edge list, and CSV tables.

Readers never let a malformed file escape as a traceback: every problem is a
``ParseError`` naming the file, the line when there is one, and what was
expected. Floats are written round-trip exact (shortest repr in JSON,
``%.17g`` in CSV).
"""
import json
import re
from pathlib import Path
from typing import Any, List, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from montecarlo.schemas import ExperimentConfig, ExperimentSummary, TrialRecord
from rdpg.errors import ParseError
from rdpg.model import validate_distribution
from rdpg.schemas import (
    AdjacencyMatrix,
    Embedding,
    InnerProductDistribution,
    LatentPositions,
    OOSConnectivity,
    OOSEstimate,
)

CSV_FLOAT_FORMAT = "%.17g"


# ---------------------------------------------------------------------------
# JSON plumbing
# ---------------------------------------------------------------------------

def _write_json(path, payload: Any) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _read_json(path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(str(path), None, f"a readable file ({e.strerror})") from e
    except UnicodeDecodeError as e:
        raise ParseError(str(path), None, f"UTF-8 text (bad byte at offset {e.start})") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(str(path), e.lineno, f"valid JSON ({e.msg})") from e


def _validation_message(e: ValidationError) -> str:
    first = e.errors()[0]
    where = ".".join(str(p) for p in first["loc"]) or "document"
    return f"a valid '{where}' field ({first['msg']})"


def _require(path, payload: Any, keys: Sequence[str]) -> None:
    if not isinstance(payload, dict):
        raise ParseError(str(path), 1, "a JSON object")
    for key in keys:
        if key not in payload:
            raise ParseError(str(path), None, f"a '{key}' field")


def _model(path, cls, payload: Any):
    try:
        return cls.model_validate(payload)
    except ValidationError as e:
        raise ParseError(str(path), None, _validation_message(e)) from e


def _array(path, payload: Any, key: str, ndim: int) -> np.ndarray:
    try:
        arr = np.array(payload[key], dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(str(path), None, f"'{key}' to be numeric") from e
    if arr.ndim != ndim and not (ndim == 2 and arr.size == 0):
        raise ParseError(str(path), None, f"'{key}' to be a {ndim}-d array")
    return arr


# ---------------------------------------------------------------------------
# Distribution and experiment config
# ---------------------------------------------------------------------------

def read_distribution(path) -> InnerProductDistribution:
    """{"dim": int, "atoms": [[...], ...], "weights": [...]}; also checks atom inner products."""
    payload = _read_json(path)
    _require(path, payload, ["dim", "atoms", "weights"])
    dist = _model(path, InnerProductDistribution, payload)
    validate_distribution(dist)
    return dist


def write_distribution(dist: InnerProductDistribution, path) -> None:
    _write_json(path, dist.model_dump())


def read_config(path) -> ExperimentConfig:
    """ExperimentConfig JSON with the distribution inlined under "distribution"."""
    payload = _read_json(path)
    _require(path, payload, ["distribution", "n_values", "trials"])
    cfg = _model(path, ExperimentConfig, payload)
    validate_distribution(cfg.distribution)
    return cfg


# ---------------------------------------------------------------------------
# Edge list
# ---------------------------------------------------------------------------

def write_edge_list(A: AdjacencyMatrix, path) -> None:
    """First line "n <count>", then one "i j" line per edge with i < j, row-major."""
    rows, cols = np.nonzero(np.triu(A.A, k=1))
    lines = [f"n {A.n}"] + [f"{i} {j}" for i, j in zip(rows.tolist(), cols.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_edge_list(path) -> AdjacencyMatrix:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ParseError(str(path), None, f"a readable file ({e.strerror})") from e
    except UnicodeDecodeError as e:
        raise ParseError(str(path), None, f"UTF-8 text (bad byte at offset {e.start})") from e
    if not lines:
        raise ParseError(str(path), 1, "a header line 'n <count>'")

    header = lines[0].split()
    if len(header) != 2 or header[0] != "n" or not re.fullmatch(r"[0-9]+", header[1]) or int(header[1]) < 1:
        raise ParseError(str(path), 1, "a header line 'n <count>' with count >= 1")
    n = int(header[1])

    A = np.zeros((n, n), dtype=float)
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(str(path), lineno, "two vertex indices 'i j'")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(str(path), lineno, "integer vertex indices")
        if not 0 <= i < j < n:
            raise ParseError(str(path), lineno, f"indices with 0 <= i < j < {n}")
        if A[i, j]:
            raise ParseError(str(path), lineno, f"no duplicate of edge {i} {j}")
        A[i, j] = A[j, i] = 1.0
    return AdjacencyMatrix(A=A)


# ---------------------------------------------------------------------------
# Latent positions and OOS connectivity
# ---------------------------------------------------------------------------

def write_latent(X: LatentPositions, path) -> None:
    _write_json(path, {
        "n": X.n,
        "d": X.d,
        "positions": X.X.tolist(),
        "labels": None if X.labels is None else X.labels.tolist(),
    })


def read_latent(path) -> LatentPositions:
    payload = _read_json(path)
    _require(path, payload, ["positions"])
    X = _array(path, payload, "positions", 2)
    try:
        return LatentPositions(X=X, labels=payload.get("labels"))
    except ValidationError as e:
        raise ParseError(str(path), None, _validation_message(e)) from e


def write_oos(oos: OOSConnectivity, path) -> None:
    _write_json(path, {
        "a": [int(v) for v in oos.a],
        "w_bar": None if oos.w_bar is None else oos.w_bar.tolist(),
        "atom": oos.atom,
    })


def read_oos(path) -> OOSConnectivity:
    payload = _read_json(path)
    _require(path, payload, ["a"])
    try:
        return OOSConnectivity(a=payload["a"], w_bar=payload.get("w_bar"), atom=payload.get("atom"))
    except ValidationError as e:
        raise ParseError(str(path), None, _validation_message(e)) from e


# ---------------------------------------------------------------------------
# Embeddings and OOS results
# ---------------------------------------------------------------------------

def write_embedding(emb: Embedding, path) -> None:
    payload = {
        "kind": emb.kind,
        "d": emb.d,
        "eigenvalues": emb.eigenvalues.tolist(),
        "positions": emb.positions.tolist(),
    }
    if emb.degrees is not None:
        payload["degrees"] = emb.degrees.tolist()
    _write_json(path, payload)


def read_embedding(path) -> Embedding:
    """{"kind", "d", "eigenvalues", "positions", "degrees" (lse only)}."""
    payload = _read_json(path)
    _require(path, payload, ["kind", "d", "eigenvalues", "positions"])
    if payload["kind"] == "lse" and "degrees" not in payload:
        raise ParseError(str(path), None, "a 'degrees' field for an LSE embedding")
    positions = _array(path, payload, "positions", 2)
    if positions.ndim != 2 or positions.shape[1] != payload["d"]:
        raise ParseError(str(path), None, f"'positions' rows of length d={payload['d']}")
    try:
        return Embedding(
            positions=positions,
            eigenvalues=_array(path, payload, "eigenvalues", 1),
            kind=payload["kind"],
            degrees=_array(path, payload, "degrees", 1) if "degrees" in payload else None,
        )
    except ValidationError as e:
        raise ParseError(str(path), None, _validation_message(e)) from e


def write_oos_result(estimate: OOSEstimate, path) -> None:
    _write_json(path, {
        "method": estimate.method,
        "w": estimate.w.tolist(),
        "diagnostics": estimate.diagnostics.model_dump(),
    })


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

def records_frame(records: List[TrialRecord], d: int) -> pd.DataFrame:
    """trial,n,method,atom,est_1..est_d,target_1..target_d,error,failed; failed rows leave estimates empty."""
    est_cols = [f"est_{k + 1}" for k in range(d)]
    target_cols = [f"target_{k + 1}" for k in range(d)]
    rows = []
    for r in records:
        row = {"trial": r.trial, "n": r.n, "method": r.method, "atom": r.atom}
        estimate = r.estimate if r.estimate is not None else [np.nan] * d
        row.update(zip(est_cols, estimate))
        row.update(zip(target_cols, r.target))
        row["error"] = np.nan if r.error is None else r.error
        row["failed"] = int(r.failed)
        rows.append(row)
    columns = ["trial", "n", "method", "atom", *est_cols, *target_cols, "error", "failed"]
    return pd.DataFrame(rows, columns=columns)


def write_csv(frame: pd.DataFrame, path) -> None:
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)


def write_records(records: List[TrialRecord], d: int, path) -> None:
    write_csv(records_frame(records, d), path)


def write_summary(summary: ExperimentSummary, path) -> None:
    _write_json(path, summary.model_dump())


def write_model(model, path) -> None:
    """Any pydantic result (e.g. a classification summary), keys by alias."""
    _write_json(path, model.model_dump(by_alias=True))
