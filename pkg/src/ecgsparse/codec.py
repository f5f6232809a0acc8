"""Beat compression: sparse coefficient triplets, reconstruction, Err/Cr metrics.

A beat's windowed wavelet features are coded against a trained dictionary;
only the nonzero coefficients (row, col, value) are stored.  Reconstruction
inverts each window's wavelet feature and overlap-adds with uniform
averaging.  Err and Cr follow the usual definitions:

    Err = mean_i ||M_i - N_i||_2 / ||N_i||_2
    Cr  = mean_i (n - m_i) / n        (m_i = stored triplet count, n = 300)
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptFileError, DegenerateInputError, ShapeMismatchError
from .fileio import atomic_write_bytes
from .ingest import BEAT_LENGTH, CODE_LABELS, LABEL_CODES, OTHER_LABEL
from .sparse_coding import encode_all
from .wavelet import FeatureMatrix, Pyramid, dwt, idwt


@dataclass
class SparseCode:
    """Sparse k x Omega coefficient matrix for one beat.

    Triplets are canonical: sorted by (col, row), unique, no zero values.
    source_id identifies the beat for seeding purposes and is not part of
    the stored payload (equality ignores it).
    """

    k: int
    omega: int
    triplets: list
    label: str = OTHER_LABEL
    source_id: str = ""

    def __eq__(self, other):
        if not isinstance(other, SparseCode):
            return NotImplemented
        return (self.k == other.k and self.omega == other.omega
                and self.label == other.label and self.triplets == other.triplets)

    @property
    def nnz(self):
        return len(self.triplets)

    def to_dense(self):
        X = np.zeros((self.k, self.omega))
        for r, c, v in self.triplets:
            X[r, c] = v
        return X

    @classmethod
    def from_dense(cls, X, label=OTHER_LABEL, source_id=""):
        X = np.asarray(X, dtype=float)
        k, omega = X.shape
        cols, rows = np.nonzero(X.T)  # iterate column-major for (col, row) order
        triplets = [(int(r), int(c), float(X[r, c])) for c, r in zip(cols, rows)]
        return cls(k=k, omega=omega, triplets=triplets, label=label,
                   source_id=source_id)


def compress(D, beat_features, lam, label=None, source_id=None):
    """encode_all on the beat's FeatureMatrix, stored as canonical triplets.

    Accepts either a FeatureMatrix or a plain d x Omega column matrix.
    """
    Y = getattr(beat_features, "columns", beat_features)
    X = encode_all(D, Y, lam)
    if label is None:
        label = getattr(beat_features, "label", OTHER_LABEL)
    if source_id is None:
        source_id = str(getattr(beat_features, "beat_index", 0))
    return SparseCode.from_dense(X, label=label, source_id=source_id)


def decompress(D, code):
    """Dense feature approximation: column i of the result is D @ x_i."""
    D = np.asarray(D, dtype=float)
    if D.shape[1] != code.k:
        raise ShapeMismatchError(
            f"dictionary has k={D.shape[1]} atoms but code expects k={code.k}")
    return D @ code.to_dense()


# ---------------------------------------------------------------------------
# beat reconstruction


def _split_pyramid(column, template):
    sizes = [len(template.approx)] + [len(d) for d in template.details]
    if len(column) != sum(sizes):
        raise ShapeMismatchError(
            f"feature column has {len(column)} coefficients, geometry implies {sum(sizes)}")
    parts = np.split(np.asarray(column, dtype=float), np.cumsum(sizes)[:-1])
    return Pyramid(approx=parts[0], details=list(parts[1:]),
                   lengths=list(template.lengths), fb_name=template.fb_name)


def reconstruct_beat(Y_hat, geometry, n=BEAT_LENGTH):
    """Invert each window feature by idwt and overlap-add with averaging.

    geometry is (w, s, fb, wl) matching the extract_windows call that
    produced the features.  Samples covered by no window stay zero.
    """
    w, s, fb, wl = geometry
    cols = Y_hat.columns if isinstance(Y_hat, FeatureMatrix) else np.asarray(Y_hat)
    template = dwt(np.zeros(w), fb, wl)
    omega = cols.shape[1]
    positions = np.arange(omega) * s
    if omega and positions[-1] + w > n:
        raise ShapeMismatchError(
            f"{omega} windows of length {w} at stride {s} overrun {n} samples")
    acc = np.zeros(n)
    cover = np.zeros(n)
    for i, p in enumerate(positions):
        win = idwt(_split_pyramid(cols[:, i], template), fb)
        acc[p:p + w] += win
        cover[p:p + w] += 1.0
    out = np.zeros(n)
    hit = cover > 0
    out[hit] = acc[hit] / cover[hit]
    return out


# ---------------------------------------------------------------------------
# metrics


def err_metric(reconstructed, originals):
    """Eq. 9: mean over beats of ||M_i - N_i||_2 / ||N_i||_2."""
    if len(reconstructed) != len(originals):
        raise ShapeMismatchError(
            f"{len(reconstructed)} reconstructions vs {len(originals)} originals")
    total = 0.0
    for i, (m, nvec) in enumerate(zip(reconstructed, originals)):
        m = np.asarray(m, dtype=float)
        nvec = np.asarray(nvec, dtype=float)
        if m.shape != nvec.shape:
            raise ShapeMismatchError(f"beat {i}: shapes {m.shape} vs {nvec.shape}")
        denom = np.linalg.norm(nvec)
        if denom == 0.0:
            raise DegenerateInputError(f"beat {i} has zero norm")
        total += np.linalg.norm(m - nvec) / denom
    return total / len(originals) if originals else 0.0


def cr_metric(codes, n=BEAT_LENGTH):
    """Eq. 10: mean over beats of (n - m)/n with m the triplet count."""
    if n <= 0:
        raise ShapeMismatchError("n must be positive")
    if not codes:
        return 0.0
    return float(np.mean([(n - c.nnz) / n for c in codes]))


# ---------------------------------------------------------------------------
# SBC1 code file


MAGIC_SBC1 = b"SBC1"


def serialize_codes(codes):
    """SBC1 bytes: magic, u32 k, u32 count; per beat u32 Omega, u8 label,
    u32 nnz, then (u32 row, u32 col, f32 value) triplets in canonical order.

    Values are quantized to f32 on disk; triplets whose f32 image is exactly
    zero are dropped so every stored value is nonzero.
    """
    k = codes[0].k if codes else 0
    out = [MAGIC_SBC1, struct.pack("<II", k, len(codes))]
    for code in codes:
        if code.k != k:
            raise ShapeMismatchError(f"inconsistent k: {code.k} vs {k}")
        kept = [(r, c, np.float32(v)) for r, c, v in code.triplets
                if np.float32(v) != 0.0]
        label_code = LABEL_CODES.get(code.label, LABEL_CODES[OTHER_LABEL])
        out.append(struct.pack("<IBI", code.omega, label_code, len(kept)))
        for r, c, v in kept:
            out.append(struct.pack("<IIf", r, c, v))
    return b"".join(out)


def parse_codes(blob):
    if blob[:4] != MAGIC_SBC1:
        raise CorruptFileError(f"bad magic {blob[:4]!r}")
    if len(blob) < 12:
        raise CorruptFileError("header truncated")
    k, count = struct.unpack("<II", blob[4:12])
    pos = 12
    codes = []
    for i in range(count):
        if pos + 9 > len(blob):
            raise CorruptFileError(f"beat {i}: record header truncated")
        omega, label_code, nnz = struct.unpack("<IBI", blob[pos:pos + 9])
        pos += 9
        if label_code not in CODE_LABELS:
            raise CorruptFileError(f"beat {i}: unknown label code {label_code}")
        if pos + 12 * nnz > len(blob):
            raise CorruptFileError(f"beat {i}: triplets truncated")
        triplets = []
        prev = None
        for _ in range(nnz):
            r, c, v = struct.unpack("<IIf", blob[pos:pos + 12])
            pos += 12
            if r >= k or c >= omega:
                raise CorruptFileError(f"beat {i}: triplet ({r},{c}) out of range")
            if v == 0.0:
                raise CorruptFileError(f"beat {i}: zero-valued triplet stored")
            key = (c, r)
            if prev is not None and key <= prev:
                raise CorruptFileError(f"beat {i}: triplets not in canonical order")
            prev = key
            triplets.append((r, c, float(v)))
        codes.append(SparseCode(k=k, omega=omega, triplets=triplets,
                                label=CODE_LABELS[label_code], source_id=str(i)))
    if pos != len(blob):
        raise CorruptFileError(f"{len(blob) - pos} trailing bytes")
    return codes


def save_codes(path, codes):
    atomic_write_bytes(path, serialize_codes(codes))


def load_codes(path):
    with open(path, "rb") as fh:
        return parse_codes(fh.read())


def code_file_roundtrip(codes):
    return parse_codes(serialize_codes(codes))
