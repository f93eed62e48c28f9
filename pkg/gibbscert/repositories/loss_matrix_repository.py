"""
Repository for file-backed loss matrices.

File format (CSV):

    m=<int>
    l_00,l_01,...,l_0(m-1)
    l_10,...

Row r holds the losses of posterior draw r on every example, rows in
draw-index order. Every cell is validated into [0, 1] when the file is
read, before any computation starts.
"""

import csv
import hashlib
import io
import logging
import math
import re
from pathlib import Path
from typing import Any, Dict, Hashable, NamedTuple, Optional

import numpy as np

from ..exceptions import DataIngestionError, ErrorCode, ValidationError
from .base_repository import DatasetHandle, LossOracle, PosteriorSampler

_HEADER = re.compile(r"^\s*m\s*=\s*(\d+)\s*$")


class LossMatrix(NamedTuple):
    values: np.ndarray
    sha256: str
    path: Path

    @property
    def rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def m(self) -> int:
        return int(self.values.shape[1])


class LossMatrixDataset(DatasetHandle):
    def __init__(self, matrix: LossMatrix):
        super().__init__()
        self.matrix = matrix

    @property
    def repository_name(self) -> str:
        return "LossMatrixDataset"

    @property
    def thread_safe(self) -> bool:
        return True

    @property
    def size(self) -> int:
        return self.matrix.m

    def example(self, j: int) -> Hashable:
        self.check_index(j)
        return j

    def describe(self) -> Optional[Dict[str, Any]]:
        return {
            "source": "loss-matrix",
            "sha256": self.matrix.sha256,
            "rows": self.matrix.rows,
            "m": self.matrix.m,
        }


class LossMatrixSampler(PosteriorSampler):
    """Draw t is row t of the file; rows are never reused."""

    def __init__(self, matrix: LossMatrix, seed: int = 0):
        super().__init__()
        self.matrix = matrix
        self._seed = seed

    @property
    def repository_name(self) -> str:
        return "LossMatrixSampler"

    @property
    def thread_safe(self) -> bool:
        return True

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def available_draws(self) -> Optional[int]:
        return self.matrix.rows

    def draw(self, t: int) -> int:
        if not 0 <= t < self.matrix.rows:
            raise ValidationError(
                message=f"draw {t} requested but the loss matrix has only "
                f"{self.matrix.rows} rows; rows are never reused",
                error_code=ErrorCode.DIMENSION_MISMATCH,
                field_name="rows",
                provided_value=self.matrix.rows,
            )
        return t


class LossMatrixOracle(LossOracle):
    def __init__(self, matrix: LossMatrix):
        super().__init__()
        self.matrix = matrix

    @property
    def repository_name(self) -> str:
        return "LossMatrixOracle"

    @property
    def thread_safe(self) -> bool:
        return True

    def loss(self, hypothesis: int, example: Hashable) -> float:
        return float(self.matrix.values[hypothesis, int(example)])


class LossMatrixBundle(NamedTuple):
    dataset: LossMatrixDataset
    sampler: LossMatrixSampler
    oracle: LossMatrixOracle


class LossMatrixRepository:
    """Reads and validates loss-matrix files."""

    def __init__(self):
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    def read(self, path: Path) -> LossMatrix:
        """
        Read and validate a loss matrix.

        Args:
            path: CSV file with an `m=<int>` header line

        Returns:
            The validated matrix

        Raises:
            DataIngestionError: If the file cannot be read
            ValidationError: If the header, a row length or a cell is invalid
        """
        path = Path(path)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            raise DataIngestionError(
                message=f"loss matrix file not found: {path}",
                error_code=ErrorCode.FILE_NOT_FOUND,
                path=path,
            )
        except OSError as e:
            raise DataIngestionError(
                message=f"cannot read loss matrix file {path}: {e}",
                error_code=ErrorCode.FILE_UNREADABLE,
                path=path,
            )
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise DataIngestionError(
                message=f"loss matrix file {path} is not UTF-8 text",
                error_code=ErrorCode.FILE_UNREADABLE,
                path=path,
                details={"position": e.start},
            )

        lines = text.splitlines()
        header = _HEADER.match(lines[0]) if lines else None
        if header is None or int(header.group(1)) < 1:
            raise ValidationError(
                message=f"{path}: first line must be 'm=<positive int>'",
                error_code=ErrorCode.MATRIX_MALFORMED,
                field_name="header",
                provided_value=lines[0] if lines else "",
            )
        m = int(header.group(1))

        rows = []
        reader = csv.reader(io.StringIO("\n".join(lines[1:])))
        for offset, cells in enumerate(reader):
            line_number = offset + 2
            if not cells or all(not cell.strip() for cell in cells):
                continue
            if len(cells) != m:
                raise ValidationError(
                    message=f"{path}: line {line_number} has {len(cells)} cells, expected m={m}",
                    error_code=ErrorCode.DIMENSION_MISMATCH,
                    details={"line": line_number, "row": len(rows)},
                )
            row = []
            for column, cell in enumerate(cells):
                row.append(self._parse_cell(path, cell, line_number, len(rows), column))
            rows.append(row)

        if not rows:
            raise ValidationError(
                message=f"{path}: no loss rows after the header",
                error_code=ErrorCode.MATRIX_MALFORMED,
            )

        matrix = LossMatrix(
            values=np.array(rows, dtype=np.float64),
            sha256=hashlib.sha256(raw).hexdigest(),
            path=path,
        )
        self.logger.info(
            f"Loaded loss matrix {path.name}",
            extra={"rows": matrix.rows, "m": matrix.m, "sha256": matrix.sha256},
        )
        return matrix

    @staticmethod
    def _parse_cell(path: Path, cell: str, line_number: int, row: int, column: int) -> float:
        coordinates = {"line": line_number, "row": row, "column": column}
        try:
            value = float(cell)
        except ValueError:
            raise ValidationError(
                message=f"{path}: row {row}, column {column} (line {line_number}) "
                f"is not a number: {cell.strip()!r}",
                error_code=ErrorCode.MATRIX_MALFORMED,
                provided_value=cell.strip(),
                details=coordinates,
            )
        if not (math.isfinite(value) and 0.0 <= value <= 1.0):
            raise ValidationError(
                message=f"{path}: row {row}, column {column} (line {line_number}) "
                f"= {cell.strip()} is outside [0, 1]",
                error_code=ErrorCode.LOSS_OUT_OF_RANGE,
                provided_value=cell.strip(),
                details=coordinates,
                remediation="Rescale the losses onto [0, 1] before writing the matrix",
            )
        return value


def ingest_loss_matrix(path: Path, seed: int = 0) -> LossMatrixBundle:
    """Read a loss-matrix file and wrap it as dataset, sampler and oracle."""
    matrix = LossMatrixRepository().read(path)
    return LossMatrixBundle(
        dataset=LossMatrixDataset(matrix),
        sampler=LossMatrixSampler(matrix, seed=seed),
        oracle=LossMatrixOracle(matrix),
    )
