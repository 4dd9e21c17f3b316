"""On-disk cache of eigensystems keyed by the operator checksum.

Entries are ``.npz`` files written atomically (temp file + rename). A file that
cannot be read, carries another format version or whose stored checksum does
not match its name is reported and recomputed.
"""

from __future__ import annotations

import logging
import os
import tempfile
import warnings
from pathlib import Path

import numpy as np

from .linalg import EigenSystem, checksum, eig_hermitian

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
ENV_VAR = "MOURRELAB_CACHE_DIR"


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "mourrelab"


class EigenCache:
    def __init__(self, directory: str | os.PathLike | None = None, enabled: bool = True):
        self.directory = Path(directory) if directory is not None else default_cache_dir()
        self.enabled = enabled
        self.hits = 0
        self.misses = 0

    def path_for(self, key: str) -> Path:
        return self.directory / f"eig-{key[:32]}.npz"

    def _load(self, path: Path, key: str) -> EigenSystem | None:
        try:
            with np.load(path, allow_pickle=False) as data:
                version = int(data["version"])
                stored = str(data["checksum"])
                values, vectors = data["values"], data["vectors"]
        except Exception as exc:  # noqa: BLE001 - any unreadable file is treated the same
            warnings.warn(f"cache entry {path.name} is unreadable ({exc}); recomputing", stacklevel=3)
            return None
        if version != FORMAT_VERSION or stored != key:
            warnings.warn(f"cache entry {path.name} is stale or mislabelled; recomputing", stacklevel=3)
            return None
        return EigenSystem(values, vectors, key)

    def _store(self, path: Path, eig: EigenSystem) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.savez(
                    fh,
                    version=np.array(FORMAT_VERSION),
                    checksum=np.array(eig.source_checksum),
                    values=eig.values,
                    vectors=eig.vectors,
                )
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def eigensystem(self, op: np.ndarray, check: bool = True) -> EigenSystem:
        """Eigensystem of ``op``, from disk when available."""
        if not self.enabled:
            return eig_hermitian(op, check=check)
        key = checksum(op)
        path = self.path_for(key)
        if path.exists():
            eig = self._load(path, key)
            if eig is not None:
                self.hits += 1
                log.debug("cache hit %s", path.name)
                return eig
        self.misses += 1
        eig = eig_hermitian(op, check=check)
        try:
            self._store(path, eig)
        except OSError as exc:
            log.warning("could not write cache entry %s: %s", path, exc)
        return eig
