"""
Repository for emitted artifacts: certificates and lab reports.

Artifacts are written in canonical form (see utils.canonical_json) and
atomically: the bytes go to a temporary file next to the destination,
which is renamed into place only once complete. A failed run never leaves
a partial artifact behind.
"""

import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from pydantic import ValidationError as PydanticValidationError

from ..config import get_settings
from ..exceptions import DataIngestionError, ErrorCode, IntegrityError
from ..models import Certificate
from ..utils.canonical_json import canonical_dumps, canonical_float


class ArtifactRepository:
    """Serializes artifacts and stores them on disk or stdout."""

    def __init__(self):
        self.logger = logging.getLogger(
            f"{self.__class__.__module__}.{self.__class__.__name__}"
        )

    @property
    def repository_name(self) -> str:
        return "ArtifactRepository"

    def to_json(self, payload: Any) -> str:
        """Canonical JSON text with a trailing newline."""
        return canonical_dumps(payload) + "\n"

    def to_csv(self, rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
        """CSV text with a header row; floats use the canonical precision, booleans true/false."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([self._csv_cell(row.get(column)) for column in columns])
        return buffer.getvalue()

    @staticmethod
    def _csv_cell(value: Any) -> str:
        if value is None:
            return ""
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return canonical_float(value, get_settings().float_digits)
        if hasattr(value, "value"):
            return str(value.value)
        return str(value)

    def write_text(self, text: str, destination: Optional[Path]) -> None:
        """
        Write text atomically to destination, or to stdout when destination is None.

        Raises:
            DataIngestionError: If the destination cannot be written
        """
        if destination is None:
            sys.stdout.write(text)
            sys.stdout.flush()
            return

        destination = Path(destination)
        directory = destination.parent if str(destination.parent) else Path(".")
        try:
            handle = tempfile.NamedTemporaryFile(
                mode="w",
                encoding="utf-8",
                newline="",
                dir=directory,
                prefix=f".{destination.name}.",
                suffix=".tmp",
                delete=False,
            )
            try:
                with handle:
                    handle.write(text)
                os.replace(handle.name, destination)
            except BaseException:
                Path(handle.name).unlink(missing_ok=True)
                raise
        except OSError as e:
            raise DataIngestionError(
                message=f"cannot write artifact {destination}: {e}",
                error_code=ErrorCode.FILE_UNWRITABLE,
                path=destination,
                remediation="Check that the output directory exists and is writable",
            )

        self.logger.info(
            f"Wrote artifact {destination}",
            extra={"path": str(destination), "bytes": len(text.encode("utf-8"))},
        )

    def read_certificate(self, path: Path) -> Certificate:
        """
        Load a certificate from its JSON file.

        Raises:
            DataIngestionError: If the file cannot be read
            IntegrityError: If the content is not a valid certificate
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise DataIngestionError(
                message=f"certificate file not found: {path}",
                error_code=ErrorCode.FILE_NOT_FOUND,
                path=path,
            )
        except (OSError, UnicodeDecodeError) as e:
            raise DataIngestionError(
                message=f"cannot read certificate file {path}: {e}",
                error_code=ErrorCode.FILE_UNREADABLE,
                path=path,
            )
        return self.parse_certificate(text, source=str(path))

    def parse_certificate(self, text: str, source: str = "<text>") -> Certificate:
        try:
            return Certificate.model_validate(json.loads(text))
        except (json.JSONDecodeError, PydanticValidationError) as e:
            raise IntegrityError(
                message=f"{source} is not a valid certificate: {e}",
                error_code=ErrorCode.SCHEMA_MISMATCH,
                details={"source": source},
            )

    def certificate_to_json(self, certificate: Certificate) -> str:
        return self.to_json(certificate.model_dump(mode="json"))

    def reports_to_json(self, reports: Iterable[Any]) -> str:
        return self.to_json([report.model_dump(mode="json") for report in reports])

    def reports_to_csv(self, reports: List[Any]) -> str:
        if not reports:
            return ""
        columns = list(type(reports[0]).model_fields)
        return self.to_csv([report.model_dump() for report in reports], columns)


def certificate_to_json(certificate: Certificate) -> str:
    """Canonical JSON text of a certificate."""
    return ArtifactRepository().certificate_to_json(certificate)


def certificate_from_json(text: str) -> Certificate:
    """Parse canonical (or any valid) certificate JSON."""
    return ArtifactRepository().parse_certificate(text)
