"""Reading, writing and validating latent embedding matrices.

A latent matrix is represented as a read-only, C-contiguous ``float64``
array of shape ``(n_rows, n_dims)``. Three on-disk formats are supported:

``npy``
    A subset of the NumPy ``.npy`` format: version 1.0 headers,
    little-endian ``<f4``/``<f8`` payloads, C order, 1-D or 2-D shapes.
``raw``
    Headerless little-endian reals. Element width and ``n_dims`` are
    supplied by the caller.
``csv``
    UTF-8 text, comma separated, one row per sample. A single header row is
    skipped when its first token is not a number.
"""

import ast
import csv
import io
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, UnsupportedLayoutError, ValidationError

__all__ = [
    "EmbeddingFormat",
    "as_latent_matrix",
    "load_embeddings",
    "save_embeddings",
    "flatten_grid",
    "unflatten_grid",
    "flatten_grids",
]

NPY_MAGIC = b"\x93NUMPY"
_NPY_PREAMBLE = len(NPY_MAGIC) + 2 + 2  # magic, version, header length
_NPY_ALIGN = 64

KINDS = ("npy", "raw", "csv")
_DTYPES = {32: np.dtype("<f4"), 64: np.dtype("<f8")}
_DESCR_WIDTH = {"<f4": 32, "<f8": 64}


@dataclass(frozen=True)
class EmbeddingFormat:
    """File format declaration.

    ``width`` is the stored element width in bits. For ``npy`` files it is
    only used when writing; the reader takes the width from the header.
    ``n_dims`` is required to read ``raw`` files.
    """

    kind: str = "npy"
    width: int = 64
    n_dims: int = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown embedding format {self.kind!r}; expected one of {KINDS}")
        if self.width not in _DTYPES:
            raise ValidationError(f"element width must be 32 or 64 bits, got {self.width}")
        if self.n_dims is not None and self.n_dims < 1:
            raise ValidationError(f"n_dims must be >= 1, got {self.n_dims}")

    @property
    def dtype(self):
        return _DTYPES[self.width]

    @classmethod
    def from_path(cls, path, **kwargs):
        """Guess the format kind from a file extension."""
        ext = os.path.splitext(str(path))[1].lower()
        kind = {".npy": "npy", ".csv": "csv", ".txt": "csv"}.get(ext, "raw")
        return cls(kind=kind, **kwargs)


def as_latent_matrix(values, name="matrix"):
    """Validate ``values`` and return it as a read-only ``(n, d)`` float64 array.

    1-D input becomes a single row. Raises `ValidationError` on empty input,
    more than two axes, or non-finite entries (the message names the first
    offending row).
    """
    arr = np.array(values, dtype=np.float64, order="C", copy=True)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValidationError(f"{name}: expected 1-D or 2-D data, got {arr.ndim} axes")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name}: empty matrix of shape {arr.shape}")
    finite = np.isfinite(arr)
    if not finite.all():
        row = int(np.flatnonzero(~finite.all(axis=1))[0])
        raise ValidationError(f"{name}: non-finite value in row {row}")
    arr.flags.writeable = False
    return arr


def _check_same_dims(a, b, names=("query", "train")):
    if a.shape[1] != b.shape[1]:
        raise ValidationError(
            f"dimension mismatch: {names[0]} has {a.shape[1]} dims, {names[1]} has {b.shape[1]}"
        )


# -- npy subset -------------------------------------------------------------

def _read_npy(data, path):
    if len(data) < _NPY_PREAMBLE:
        raise FormatError(f"{path}: truncated npy preamble at byte {len(data)}")
    if data[:6] != NPY_MAGIC:
        raise FormatError(f"{path}: bad npy magic at byte 0")
    major, minor = data[6], data[7]
    if (major, minor) != (1, 0):
        raise UnsupportedLayoutError(f"{path}: npy version {major}.{minor} at byte 6 is not supported (need 1.0)")
    (header_len,) = struct.unpack("<H", data[8:10])
    header_end = _NPY_PREAMBLE + header_len
    if header_end > len(data):
        raise FormatError(f"{path}: header length {header_len} at byte 8 runs past end of file")
    try:
        header = ast.literal_eval(data[_NPY_PREAMBLE:header_end].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"{path}: unparsable npy header at byte {_NPY_PREAMBLE}") from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise FormatError(f"{path}: npy header at byte {_NPY_PREAMBLE} must hold exactly descr/fortran_order/shape")

    descr, fortran, shape = header["descr"], header["fortran_order"], header["shape"]
    if fortran is not False:
        raise UnsupportedLayoutError(f"{path}: fortran_order arrays are not supported")
    if descr not in _DESCR_WIDTH:
        raise UnsupportedLayoutError(f"{path}: element type {descr!r} is not supported (need '<f4' or '<f8')")
    if (
        not isinstance(shape, tuple)
        or len(shape) not in (1, 2)
        or not all(isinstance(s, int) and s >= 0 for s in shape)
    ):
        raise UnsupportedLayoutError(f"{path}: shape {shape!r} is not 1-D or 2-D")

    dtype = np.dtype(descr)
    expected = int(np.prod(shape)) * dtype.itemsize
    payload = len(data) - header_end
    if payload != expected:
        raise FormatError(
            f"{path}: payload at byte {header_end} holds {payload} bytes, header shape {shape} needs {expected}"
        )
    return np.frombuffer(data, dtype=dtype, offset=header_end).reshape(shape)


def _npy_header(dtype, shape):
    descr = dtype.str
    header = "{'descr': %r, 'fortran_order': False, 'shape': %r, }" % (descr, tuple(shape))
    pad = -(_NPY_PREAMBLE + len(header) + 1) % _NPY_ALIGN
    header = header + " " * pad + "\n"
    return NPY_MAGIC + bytes([1, 0]) + struct.pack("<H", len(header)) + header.encode("latin1")


# -- raw / csv --------------------------------------------------------------

def _read_raw(data, path, fmt):
    if fmt.n_dims is None:
        raise ValidationError(f"{path}: raw format needs n_dims")
    itemsize = fmt.dtype.itemsize
    row_bytes = itemsize * fmt.n_dims
    if len(data) % row_bytes:
        cut = len(data) - len(data) % row_bytes
        raise FormatError(
            f"{path}: trailing partial row at byte {cut} ({len(data)} bytes is not a multiple of {row_bytes})"
        )
    return np.frombuffer(data, dtype=fmt.dtype).reshape(-1, fmt.n_dims)


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def _read_csv(data, path):
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8 at byte {exc.start}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(t.strip() for t in r)]
    if rows and not _is_number(rows[0][0].strip()):
        rows = rows[1:]
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    width = len(rows[0])
    values = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(f"{path}: data row {i} has {len(row)} fields, expected {width}")
        try:
            values.append([float(t) for t in row])
        except ValueError as exc:
            raise FormatError(f"{path}: data row {i}: {exc}") from exc
    return np.array(values, dtype=np.float64)


def load_embeddings(path, fmt=None):
    """Load a latent matrix from ``path``.

    Parameters
    ----------
    path : str or path-like
    fmt : EmbeddingFormat, optional
        Defaults to a guess from the file extension.

    Returns
    -------
    numpy.ndarray
        Read-only float64 array of shape ``(n_rows, n_dims)``.
    """
    fmt = fmt or EmbeddingFormat.from_path(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if fmt.kind == "npy":
        arr = _read_npy(data, path)
    elif fmt.kind == "raw":
        arr = _read_raw(data, path, fmt)
    else:
        arr = _read_csv(data, path)
    return as_latent_matrix(arr, name=str(path))


def save_embeddings(matrix, path, fmt=None):
    """Write ``matrix`` to ``path`` at ``fmt.width`` bits per element.

    Reloading the file reproduces the matrix exactly at the stored width.
    """
    fmt = fmt or EmbeddingFormat.from_path(path)
    arr = as_latent_matrix(matrix).astype(fmt.dtype)
    try:
        with open(path, "wb") as fh:
            if fmt.kind == "npy":
                fh.write(_npy_header(fmt.dtype, arr.shape))
                fh.write(arr.tobytes(order="C"))
            elif fmt.kind == "raw":
                fh.write(arr.tobytes(order="C"))
            else:
                # repr of the float64 value is exact, so csv matches npy at either width
                lines = (",".join(repr(float(v)) for v in row) for row in arr)
                fh.write(("\n".join(lines) + "\n").encode("utf-8"))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write embeddings: {exc.strerror}", str(path)) from exc


# -- grid flattening --------------------------------------------------------

CANONICAL_LAYOUT = "chw"


def _layout_perm(layout):
    layout = layout.lower()
    if sorted(layout) != sorted(CANONICAL_LAYOUT):
        raise ValidationError(f"layout must be a permutation of 'chw', got {layout!r}")
    return [layout.index(a) for a in CANONICAL_LAYOUT]


def flatten_grid(block, layout="chw", shape=None):
    """Flatten one channel/height/width latent block into a row vector.

    The output order is always channel-major, then row, then column,
    whatever the axis order of ``block``. ``layout`` names the axes of
    ``block`` (e.g. ``"hwc"``). If ``block`` is flat, ``shape`` gives its
    axis sizes in ``layout`` order.
    """
    perm = _layout_perm(layout)
    arr = np.asarray(block, dtype=np.float64)
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if len(shape) != 3 or int(np.prod(shape)) != arr.size:
            raise ValidationError(f"declared shape {shape} does not match {arr.size} elements")
        if arr.ndim == 3 and arr.shape != shape:
            raise ValidationError(f"block shape {arr.shape} does not match declared {shape}")
        arr = arr.reshape(shape)
    elif arr.ndim != 3:
        raise ValidationError(f"expected a 3-axis block, got shape {arr.shape}")
    return np.ascontiguousarray(arr.transpose(perm)).ravel()


def unflatten_grid(row, shape, layout="chw"):
    """Inverse of `flatten_grid`; ``shape`` is given in ``layout`` order."""
    perm = _layout_perm(layout)
    shape = tuple(int(s) for s in shape)
    row = np.asarray(row, dtype=np.float64)
    if len(shape) != 3 or int(np.prod(shape)) != row.size:
        raise ValidationError(f"declared shape {shape} does not match {row.size} elements")
    canonical = tuple(shape[p] for p in perm)
    return row.reshape(canonical).transpose(np.argsort(perm))


def flatten_grids(blocks, layout="chw"):
    """Flatten a batch ``(n, *block)`` of 3-axis blocks into an ``(n, c*h*w)`` matrix."""
    blocks = np.asarray(blocks, dtype=np.float64)
    if blocks.ndim != 4:
        raise ValidationError(f"expected a batch of 3-axis blocks, got shape {blocks.shape}")
    return as_latent_matrix(np.stack([flatten_grid(b, layout) for b in blocks]))
