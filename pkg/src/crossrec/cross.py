"""Cross rotation: reconciliation in dimensions beyond the closed-form limit.

Closed-form rotations exist only up to dimension 8.  The cross scheme lifts
that ceiling by reshaping each block of D = d_1 * d_2 * ... * d_T samples
into a T-way tensor (column-major, d_1 fastest) and rotating one tensor axis
per stage:

  * stage 1 rotates every axis-1 fiber onto a fresh random spherical target
    (entries +-1/sqrt(d_1)); the targets only equalize fiber norms and are
    discarded after use,
  * intermediate stages do the same along their axis with fresh random
    targets,
  * the final stage rotates the axis-T fibers onto the spherical image of
    the key bits.

Because spherical targets have constant-magnitude entries, after stage t all
fibers along the next axis share the same norm, and at the last stage every
fiber norm equals ||block|| / sqrt(D / d_T).  The sender therefore reveals
one norm per block (the Frobenius norm of the reshaped block), never
per-fiber norms, plus the rotation coefficients: d_t reals per fiber, i.e.
exactly N reals per stage for N samples (T*N total).

The receiver applies the transmitted rotations to her own correlated data
and rescales by sqrt(D / d_T) / ||block||, producing the virtual channel

    v = u + sqrt(D / d_T) / ||block|| * (rotated noise),

a binary-input Gaussian channel with means +-1/sqrt(d_T), on which an
ordinary binary decoder runs.  With two stages of size 8 this realizes
64-dimensional reconciliation at 2N overhead; more stages reach 512, 4096,
and beyond, always even multiples of 8 above dimension 8.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .rotation import (
    OrthoBasis,
    batch_apply,
    batch_coefficients,
    build_basis,
    spherical_from_bits,
)

_MAGIC = b"XRT1"

_STAGE_FACTORS = (8, 4, 2)


@dataclass(frozen=True)
class CrossDims:
    """Stage layout of a cross rotation.

    ``stage_dims[t]`` is the rotation dimension of stage t (each in
    {2, 4, 8}); the block size is their product.  Stage 1 rotates along the
    fastest-varying axis of the column-major reshape, matching a plain
    column rotation when the block is viewed as a d_1 x (D/d_1) matrix.
    """

    stage_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.stage_dims)
        object.__setattr__(self, "stage_dims", dims)
        if len(dims) < 1:
            raise ValueError("at least one stage is required")
        if any(d not in (2, 4, 8) for d in dims):
            raise ValueError(f"stage dims must be in {{2,4,8}}, got {dims}")
        total = math.prod(dims)
        if total >= 16 and total % 16 != 0:
            raise ValueError(
                f"total dimension {total} is not an even multiple of 8")

    @property
    def total_dim(self) -> int:
        return math.prod(self.stage_dims)

    @property
    def n_stages(self) -> int:
        return len(self.stage_dims)

    @classmethod
    def from_total(cls, total_dim: int) -> "CrossDims":
        """Default stage plan: leading 8, then greedy largest-first factors.

        16 -> (8, 2), 64 -> (8, 8), 512 -> (8, 8, 8), ...  Override by
        constructing CrossDims with explicit stage dims.
        """
        if total_dim in (2, 4, 8):
            return cls((total_dim,))
        if total_dim < 16 or total_dim % 16 != 0:
            raise ValueError(
                f"unsupported cross dimension {total_dim}: must be one of "
                "2, 4, 8 or an even multiple of 8")
        dims = [8]
        rest = total_dim // 8
        while rest > 1:
            for f in _STAGE_FACTORS:
                if rest % f == 0:
                    dims.append(f)
                    rest //= f
                    break
            else:
                raise ValueError(
                    f"cannot factor {total_dim} into stages from {{2,4,8}}")
        return cls(tuple(dims))


@dataclass
class CrossTranscript:
    """Everything the encoder reveals over the classical channel.

    ``stage_coeffs[t]`` has shape (G, F_t, d_t): for each of G blocks, the
    rotation coefficients of the F_t = D/d_t fibers of stage t, fiber index
    in row-major order over the remaining tensor axes.  ``block_norms`` is
    the single Frobenius norm revealed per block.  ``syndrome`` carries the
    parity bits of the key codeword when attached by the caller.
    """

    dims: CrossDims
    stage_coeffs: list[np.ndarray]
    block_norms: np.ndarray
    syndrome: np.ndarray | None = None
    axis_order: tuple[int, ...] | None = None

    @property
    def n_blocks(self) -> int:
        return self.block_norms.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.n_blocks * self.dims.total_dim

    def coefficient_count(self) -> int:
        return sum(c.size for c in self.stage_coeffs)

    # -- wire format --------------------------------------------------------

    def to_bytes(self) -> bytes:
        """Serialize: magic, stage count, dims, norms, coefficients
        (block-major, stage-major), then the syndrome as packed bits.
        All integers and floats little-endian."""
        if self.axis_order is not None and self.axis_order != tuple(
                range(self.dims.n_stages)):
            raise ValueError("only the default stage order is serializable")
        T = self.dims.n_stages
        G = self.n_blocks
        parts = [_MAGIC, struct.pack("<I", T)]
        parts.append(struct.pack(f"<{T}I", *self.dims.stage_dims))
        parts.append(struct.pack("<I", G))
        parts.append(self.block_norms.astype("<f8").tobytes())
        ncoeff = self.coefficient_count()
        parts.append(struct.pack("<Q", ncoeff))
        for g in range(G):
            for t in range(T):
                parts.append(self.stage_coeffs[t][g].astype("<f8").tobytes())
        if self.syndrome is None:
            parts.append(struct.pack("<Q", 0))
        else:
            syn = np.asarray(self.syndrome, dtype=np.uint8)
            parts.append(struct.pack("<Q", syn.shape[0]))
            parts.append(np.packbits(syn).tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "CrossTranscript":
        if raw[:4] != _MAGIC:
            raise ValueError("bad magic: not a cross-rotation transcript")
        off = 4
        (T,) = struct.unpack_from("<I", raw, off); off += 4
        dims = CrossDims(struct.unpack_from(f"<{T}I", raw, off)); off += 4 * T
        (G,) = struct.unpack_from("<I", raw, off); off += 4
        norms = np.frombuffer(raw, dtype="<f8", count=G, offset=off).copy()
        off += 8 * G
        (ncoeff,) = struct.unpack_from("<Q", raw, off); off += 8
        D = dims.total_dim
        if ncoeff != G * T * D:
            raise ValueError("coefficient count does not match dims")
        flat = np.frombuffer(raw, dtype="<f8", count=ncoeff, offset=off)
        off += 8 * ncoeff
        per_block = flat.reshape(G, T * D)
        coeffs = []
        pos = 0
        for t in range(T):
            d = dims.stage_dims[t]
            coeffs.append(
                per_block[:, pos:pos + D].reshape(G, D // d, d).copy())
            pos += D
        (nsyn,) = struct.unpack_from("<Q", raw, off); off += 8
        syndrome = None
        if nsyn:
            packed = np.frombuffer(raw, dtype=np.uint8,
                                   count=(nsyn + 7) // 8, offset=off)
            syndrome = np.unpackbits(packed)[:nsyn].copy()
        return cls(dims=dims, stage_coeffs=coeffs, block_norms=norms,
                   syndrome=syndrome)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "CrossTranscript":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def _to_tensor(blocks: np.ndarray, stage_dims: tuple[int, ...]) -> np.ndarray:
    """(G, D) rows -> (G, d_1, ..., d_T) tensors, column-major per block."""
    G = blocks.shape[0]
    T = len(stage_dims)
    arr = blocks.reshape((G,) + tuple(reversed(stage_dims)))
    return arr.transpose((0,) + tuple(range(T, 0, -1)))


def _from_tensor(tensor: np.ndarray) -> np.ndarray:
    """Inverse of :func:`_to_tensor`."""
    G = tensor.shape[0]
    T = tensor.ndim - 1
    arr = tensor.transpose((0,) + tuple(range(T, 0, -1)))
    return arr.reshape(G, -1)


def _fibers(tensor: np.ndarray, stage_axis: int) -> np.ndarray:
    """View the stage's fibers as (G, F, d): fiber index is row-major over
    the remaining axes."""
    moved = np.moveaxis(tensor, 1 + stage_axis, -1)
    return moved.reshape(tensor.shape[0], -1, tensor.shape[1 + stage_axis])


def _unfibers(fib: np.ndarray, shape: tuple[int, ...], stage_axis: int) -> np.ndarray:
    inter = list(shape)
    d = inter.pop(1 + stage_axis)
    arr = fib.reshape(tuple(inter) + (d,))
    return np.moveaxis(arr, -1, 1 + stage_axis)


def _bases_for(dims: CrossDims, bases) -> dict[int, OrthoBasis]:
    if bases is None:
        bases = {}
    for d in dims.stage_dims:
        if d not in bases:
            bases[d] = build_basis(d)
    return bases


def _resolve_order(dims: CrossDims, axis_order) -> tuple[int, ...]:
    order = tuple(range(dims.n_stages)) if axis_order is None else tuple(axis_order)
    if sorted(order) != list(range(dims.n_stages)):
        raise ValueError(f"axis_order must permute stage axes, got {order}")
    return order


def encode_bob(y: np.ndarray, codeword_bits: np.ndarray, dims: CrossDims,
               rng: np.random.Generator | None = None,
               bases: dict[int, OrthoBasis] | None = None,
               syndrome: np.ndarray | None = None,
               axis_order: tuple[int, ...] | None = None,
               _aux_targets: list[np.ndarray] | None = None) -> CrossTranscript:
    """Encoder side: rotate blocks of y stage by stage onto spherical targets.

    All stages except the last use auxiliary targets drawn from ``rng``
    (fresh OS entropy when rng is None); they are consumed here and never
    leave this function.  The last processed stage rotates onto the
    spherical image of ``codeword_bits``.  Returns the transcript holding
    the per-stage coefficients, one Frobenius norm per block, and the
    optional ``syndrome`` passed through for transmission.

    ``_aux_targets`` injects the auxiliary spherical fibers explicitly
    (testing hook; shape must match the stage fiber layout).
    """
    y = np.asarray(y, dtype=float)
    D = dims.total_dim
    if y.ndim != 1 or y.size % D != 0:
        raise ValueError(f"sample count {y.size} not divisible by block size {D}")
    bits = np.asarray(codeword_bits)
    if bits.shape != y.shape:
        raise ValueError("codeword bit count must equal the sample count")
    order = _resolve_order(dims, axis_order)
    bases = _bases_for(dims, bases)
    if rng is None:
        rng = np.random.default_rng()

    G = y.size // D
    norms = np.linalg.norm(y.reshape(G, D), axis=1)
    if np.any(norms < 1e-300):
        raise ValueError("zero-norm block: corrupted input")

    key_axis = order[-1]
    d_key = dims.stage_dims[key_axis]
    key_fibers = _fibers(
        _to_tensor(spherical_from_bits(bits.reshape(G, D), d_key), dims.stage_dims),
        key_axis)

    tensor = _to_tensor(y.reshape(G, D), dims.stage_dims)
    stage_coeffs: list[np.ndarray | None] = [None] * dims.n_stages
    for si, axis in enumerate(order):
        d = dims.stage_dims[axis]
        fib = _fibers(tensor, axis)
        if axis == key_axis:
            targets = key_fibers
        elif _aux_targets is not None:
            targets = _aux_targets[si]
        else:
            targets = spherical_from_bits(
                rng.integers(0, 2, size=fib.shape), d)
        stage_coeffs[axis] = batch_coefficients(fib, targets, bases[d])
        rotated = np.linalg.norm(fib, axis=-1)[..., None] * targets
        tensor = _unfibers(rotated, tensor.shape, axis)

    return CrossTranscript(dims=dims, stage_coeffs=stage_coeffs,
                           block_norms=norms, syndrome=syndrome,
                           axis_order=None if axis_order is None else order)


def decode_alice(transcript: CrossTranscript, x: np.ndarray,
                 dims: CrossDims | None = None,
                 bases: dict[int, OrthoBasis] | None = None) -> np.ndarray:
    """Decoder side: apply the transmitted rotations to x and rescale.

    Returns the virtual channel observation v of the same length as x.
    Only the transcript and x enter; the encoder's raw data never does.
    """
    if dims is not None and dims != transcript.dims:
        raise ValueError("dims disagree with the transcript")
    dims = transcript.dims
    x = np.asarray(x, dtype=float)
    D = dims.total_dim
    G = transcript.n_blocks
    if x.ndim != 1 or x.size != G * D:
        raise ValueError(
            f"sample count {x.size} does not match transcript ({G} blocks of {D})")
    order = _resolve_order(dims, transcript.axis_order)
    bases = _bases_for(dims, bases)

    tensor = _to_tensor(x.reshape(G, D), dims.stage_dims)
    for axis in order:
        d = dims.stage_dims[axis]
        fib = _fibers(tensor, axis)
        rotated = batch_apply(transcript.stage_coeffs[axis], fib, bases[d])
        tensor = _unfibers(rotated, tensor.shape, axis)

    d_key = dims.stage_dims[order[-1]]
    scale = np.sqrt(D / d_key) / transcript.block_norms
    return (_from_tensor(tensor) * scale[:, None]).reshape(-1)


def extend_stage(outputs: np.ndarray, next_dim: int) -> np.ndarray:
    """Arrange lower-stage output vectors as columns of the next stage.

    ``outputs`` holds G finished block vectors of length D_prev, each a
    norm-scaled spherical vector after its own cross rotation.  Groups of
    ``next_dim`` consecutive blocks become D_prev x next_dim matrices whose
    rows are the fibers the added stage rotates.  This is the recursion that
    multiplies the reconciliation dimension by ``next_dim``.
    """
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim != 2:
        raise ValueError("expected (G, D_prev) stacked block outputs")
    G = outputs.shape[0]
    if G % next_dim != 0:
        raise ValueError(
            f"block count {G} not divisible by next stage dim {next_dim}")
    return outputs.reshape(G // next_dim, next_dim, -1).transpose(0, 2, 1)


def overhead_report(dims: CrossDims | int, n_symbols: int, scheme: str) -> int:
    """Classical-channel coefficient count for n_symbols samples.

    cross: one coefficient per sample per stage (T*N); householder: full
    matrices, total_dim*N; classic: a single closed-form stage (N), valid
    only for total dimension <= 8.
    """
    if isinstance(dims, CrossDims):
        total, stages = dims.total_dim, dims.n_stages
    else:
        total = int(dims)
        stages = CrossDims.from_total(total).n_stages if scheme == "cross" else 1
    if scheme == "cross":
        return stages * n_symbols
    if scheme == "householder":
        return total * n_symbols
    if scheme == "classic":
        if total > 8:
            raise ValueError("classic closed-form rotation requires dim <= 8")
        return n_symbols
    raise ValueError(f"unknown scheme {scheme!r}")
