"""RF-DNA fingerprint assembly and storage.

A fingerprint is 204 features: four statistics (standard deviation, variance,
skewness, kurtosis) for each of 50 time-frequency patches, plus the same four
computed over the whole normalized grid. Patches tile the centered 50
frequency columns of the 150 x 150 surface: 10 time blocks of 15 by 5
frequency blocks of 10.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidShape, InvalidValue
from .gabor import TimeFrequencyMatrix

N_FEATURES = 204
GRID_SHAPE = (150, 150)
FREQ_LO, FREQ_HI = 50, 100   # centered occupied band
N_TIME_BLOCKS, N_FREQ_BLOCKS = 10, 5
PATCH_T, PATCH_F = 15, 10
N_PATCHES = N_TIME_BLOCKS * N_FREQ_BLOCKS

_MAGIC = b"RFDN"
_VERSION = 1


@dataclass
class PatchGrid:
    """Ordered list of (t0, t1, f0, f1) half-open index regions."""

    patches: list[tuple[int, int, int, int]]
    region_of_interest: tuple[int, int] = (FREQ_LO, FREQ_HI)


@dataclass
class Fingerprint:
    features: np.ndarray
    radio_id: str = ""
    claimed_id: str | None = None
    snr_db: float | None = None
    realization: int = 0

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.shape != (N_FEATURES,):
            raise InvalidShape(
                f"fingerprint must have {N_FEATURES} features"
            )


def tile_patches(tf: TimeFrequencyMatrix) -> PatchGrid:
    """Tile the centered occupied band into 50 disjoint 15 x 10 patches.

    Patch order is time-major within each frequency block row (scan time
    left to right, then step up in frequency)."""
    if tf.values.shape != GRID_SHAPE:
        raise InvalidShape(f"expected {GRID_SHAPE} grid, got {tf.values.shape}")
    patches = []
    for fb in range(N_FREQ_BLOCKS):
        f0 = FREQ_LO + fb * PATCH_F
        for tb in range(N_TIME_BLOCKS):
            t0 = tb * PATCH_T
            patches.append((t0, t0 + PATCH_T, f0, f0 + PATCH_F))
    return PatchGrid(patches=patches)


def patch_stats(cells) -> tuple[float, float, float, float]:
    """Population moments of one cell vector: (sigma, variance, skewness,
    kurtosis). Kurtosis is non-excess. A constant vector maps to all zeros."""
    x = np.asarray(cells, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)):
        raise InvalidValue("non-finite cell values")
    if x.size == 0 or np.all(x == x[0]):
        return (0.0, 0.0, 0.0, 0.0)
    mu = x.mean()
    d = x - mu
    var = np.mean(d**2)
    if var == 0.0:
        return (0.0, 0.0, 0.0, 0.0)
    sd = np.sqrt(var)
    skew = np.mean(d**3) / sd**3
    kurt = np.mean(d**4) / var**2
    return (float(sd), float(var), float(skew), float(kurt))


def _block_stats(blocks: np.ndarray) -> np.ndarray:
    """Vectorized (sigma, var, skew, kurt) over axis 1 of an (n, cells) array."""
    mu = blocks.mean(axis=1, keepdims=True)
    d = blocks - mu
    var = np.mean(d**2, axis=1)
    nz = (var > 0.0) & ~np.all(blocks == blocks[:, :1], axis=1)
    sd = np.sqrt(var)
    skew = np.zeros_like(var)
    kurt = np.zeros_like(var)
    skew[nz] = np.mean(d[nz] ** 3, axis=1) / sd[nz] ** 3
    kurt[nz] = np.mean(d[nz] ** 4, axis=1) / var[nz] ** 2
    sd = np.where(nz, sd, 0.0)
    var = np.where(nz, var, 0.0)
    return np.column_stack([sd, var, skew, kurt])


def gen_fingerprint(tf: TimeFrequencyMatrix, radio_id: str = "",
                    snr_db: float | None = None, realization: int = 0,
                    claimed_id: str | None = None) -> Fingerprint:
    if tf.values.shape != GRID_SHAPE:
        raise InvalidShape(f"expected {GRID_SHAPE} grid, got {tf.values.shape}")
    vals = tf.values
    if not np.all(np.isfinite(vals)):
        raise InvalidValue("non-finite grid values")
    region = vals[:, FREQ_LO:FREQ_HI]
    # (time_block, t, freq_block, f) -> (freq_block, time_block, cells)
    blocks = region.reshape(N_TIME_BLOCKS, PATCH_T, N_FREQ_BLOCKS, PATCH_F)
    blocks = blocks.transpose(2, 0, 1, 3).reshape(N_PATCHES, PATCH_T * PATCH_F)
    feats = _block_stats(blocks).ravel()
    global_feats = np.array(patch_stats(vals.ravel()))
    return Fingerprint(
        features=np.concatenate([feats, global_feats]),
        radio_id=radio_id, snr_db=snr_db, realization=realization,
        claimed_id=claimed_id,
    )


class FingerprintStore:
    """In-memory fingerprint collection with binary/CSV persistence.

    Reads through :meth:`select` are logged in ``access_log`` so a harness
    audit can prove no rogue-labeled rows were touched during training.
    """

    def __init__(self):
        self._features: list[np.ndarray] = []
        self._radio_ids: list[str] = []
        self._snr_db: list[float] = []          # NaN marks clean
        self._realization: list[int] = []
        self.access_log: list[str] = []
        self._cache = None

    def __len__(self):
        return len(self._radio_ids)

    def add(self, fp: Fingerprint) -> None:
        self._features.append(fp.features)
        self._radio_ids.append(fp.radio_id)
        self._snr_db.append(np.nan if fp.snr_db is None else float(fp.snr_db))
        self._realization.append(int(fp.realization))
        self._cache = None

    def _arrays(self):
        if self._cache is None:
            self._cache = (
                np.array(self._features, dtype=np.float64).reshape(
                    len(self), N_FEATURES
                ),
                np.array(self._radio_ids, dtype=object),
                np.array(self._snr_db, dtype=np.float64),
                np.array(self._realization, dtype=np.int64),
            )
        return self._cache

    def select(self, radio_id: str, realizations=None) -> np.ndarray:
        """Feature rows of one radio, optionally limited to realizations.
        Rows come back in insertion order."""
        self.access_log.append(radio_id)
        feats, ids, _, realz = self._arrays()
        mask = ids == radio_id
        if realizations is not None:
            mask &= np.isin(realz, list(realizations))
        return feats[mask]

    def radio_ids(self) -> list[str]:
        seen = {}
        for r in self._radio_ids:
            seen.setdefault(r, None)
        return list(seen)

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        feats, ids, snrs, realz = self._arrays()
        out = bytearray()
        out += _MAGIC
        out += struct.pack("<III", _VERSION, N_FEATURES, len(self))
        for i in range(len(self)):
            rid = str(ids[i]).encode("utf-8")
            out += struct.pack("<I", len(rid)) + rid
            out += struct.pack("<dI", snrs[i], int(realz[i]))
            out += feats[i].astype("<f8").tobytes()
        Path(path).write_bytes(bytes(out))

    @classmethod
    def load(cls, path) -> "FingerprintStore":
        buf = Path(path).read_bytes()
        if buf[:4] != _MAGIC:
            raise InvalidValue("not a fingerprint store file")
        version, n_f, count = struct.unpack_from("<III", buf, 4)
        if version != _VERSION or n_f != N_FEATURES:
            raise InvalidValue("unsupported store version or feature count")
        store = cls()
        off = 16
        for _ in range(count):
            (rid_len,) = struct.unpack_from("<I", buf, off)
            off += 4
            rid = buf[off:off + rid_len].decode("utf-8")
            off += rid_len
            snr, realization = struct.unpack_from("<dI", buf, off)
            off += 12
            feats = np.frombuffer(buf, dtype="<f8", count=n_f, offset=off).copy()
            off += 8 * n_f
            store.add(Fingerprint(
                features=feats, radio_id=rid,
                snr_db=None if np.isnan(snr) else snr,
                realization=realization,
            ))
        return store

    def to_csv(self, path) -> None:
        feats, ids, snrs, realz = self._arrays()
        header = [f"feature_{i + 1:03d}" for i in range(N_FEATURES)]
        header += ["radio_id", "snr_db", "realization"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(len(self)):
                row = [repr(float(v)) for v in feats[i]]
                row += [ids[i], "" if np.isnan(snrs[i]) else repr(snrs[i]),
                        int(realz[i])]
                writer.writerow(row)
