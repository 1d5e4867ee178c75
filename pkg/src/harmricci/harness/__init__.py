"""Manifold files, the identity catalog, JSON reports and the CLI."""

from .catalog import CATALOG, GROUPS, UnknownIdentityId, verify
from .manifest import Manifest, ManifestError, ParseError, ValidationError, gallery_files, load, loads

__all__ = [
    "CATALOG",
    "GROUPS",
    "Manifest",
    "ManifestError",
    "ParseError",
    "UnknownIdentityId",
    "ValidationError",
    "gallery_files",
    "load",
    "loads",
    "verify",
]
