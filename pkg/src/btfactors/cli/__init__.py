"""Command-line surface, wire formats, and run manifests."""

from .records import (
    format_candidate_record,
    parse_candidate_records,
    read_candidate_records,
    read_mono,
    read_parallel,
    read_synthetic,
    write_candidate_records,
    write_mono,
    write_parallel,
    write_synthetic,
)
from .manifest import RunManifest, read_manifest, sha256_file, write_manifest

__all__ = [
    "RunManifest",
    "format_candidate_record",
    "parse_candidate_records",
    "read_candidate_records",
    "read_manifest",
    "read_mono",
    "read_parallel",
    "read_synthetic",
    "sha256_file",
    "write_candidate_records",
    "write_manifest",
    "write_mono",
    "write_parallel",
    "write_synthetic",
]
