"""Sparse parity-check codes and syndrome-based sum-product decoding.

The decoder runs flooding sum-product (tanh rule) toward an arbitrary target
syndrome: check nodes whose target bit is 1 flip the sign of their outgoing
messages, which is all that separates coset decoding from plain zero-syndrome
decoding.  Messages are clipped to +-38 so tanh/atanh never overflow.
Decoding stops as soon as the hard decision satisfies the target syndrome.

Initial log-likelihood ratios follow the virtual-channel sign convention:
positive favors bit 0 (spherical value +1/sqrt(d)).

Parity-check matrices are exchanged in the de-facto alist text layout; a
seeded configuration-model generator provides desk-scale regular codes where
externally constructed production matrices are not available.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cross import CrossDims

LLR_CLIP = 38.0


@dataclass
class LdpcCode:
    """Binary parity-check code held as edge adjacency arrays.

    Edges are stored sorted by check node; ``var_of_edge[e]`` is the
    variable endpoint and ``check_ptr`` delimits each check's edge range.
    ``by_var`` permutes check-ordered edge ids into variable order.
    """

    n: int
    m: int
    var_of_edge: np.ndarray
    check_ptr: np.ndarray
    row_deg: np.ndarray = field(repr=False)
    col_deg: np.ndarray = field(repr=False)
    by_var: np.ndarray = field(repr=False)
    var_ptr: np.ndarray = field(repr=False)
    H: sp.csr_matrix = field(repr=False)

    @property
    def rate(self) -> float:
        return (self.n - self.m) / self.n

    @property
    def n_edges(self) -> int:
        return int(self.var_of_edge.shape[0])

    @classmethod
    def from_edges(cls, n: int, m: int, check_of_edge: np.ndarray,
                   var_of_edge: np.ndarray) -> "LdpcCode":
        if not (0 < m < n):
            raise ValueError(f"need 0 < m < n, got n={n} m={m}")
        check_of_edge = np.asarray(check_of_edge, dtype=np.int64)
        var_of_edge = np.asarray(var_of_edge, dtype=np.int64)
        order = np.lexsort((var_of_edge, check_of_edge))
        check_of_edge = check_of_edge[order]
        var_of_edge = var_of_edge[order]
        key = check_of_edge * n + var_of_edge
        if np.unique(key).size != key.size:
            raise ValueError("duplicate edges in parity-check matrix")
        row_deg = np.bincount(check_of_edge, minlength=m)
        col_deg = np.bincount(var_of_edge, minlength=n)
        if np.any(col_deg == 0):
            raise ValueError("every column must have at least one check")
        if np.any(row_deg == 0):
            raise ValueError("every check must involve at least one bit")
        check_ptr = np.concatenate(([0], np.cumsum(row_deg)))
        by_var = np.argsort(var_of_edge, kind="stable")
        var_ptr = np.concatenate(([0], np.cumsum(col_deg)))
        H = sp.csr_matrix(
            (np.ones(var_of_edge.shape[0], dtype=np.uint8),
             (check_of_edge, var_of_edge)), shape=(m, n))
        return cls(n=n, m=m, var_of_edge=var_of_edge, check_ptr=check_ptr,
                   row_deg=row_deg, col_deg=col_deg, by_var=by_var,
                   var_ptr=var_ptr, H=H)

    @classmethod
    def from_dense(cls, H: np.ndarray) -> "LdpcCode":
        H = np.asarray(H)
        ci, vi = np.nonzero(H)
        return cls.from_edges(H.shape[1], H.shape[0], ci, vi)

    def is_regular(self) -> bool:
        return (np.all(self.row_deg == self.row_deg[0])
                and np.all(self.col_deg == self.col_deg[0]))


def syndrome(code: LdpcCode, bits: np.ndarray) -> np.ndarray:
    """s = H c mod 2."""
    bits = np.asarray(bits)
    if bits.shape != (code.n,):
        raise ValueError(f"expected {code.n} bits, got {bits.shape}")
    return np.asarray(
        (code.H @ bits.astype(np.int64)) % 2, dtype=np.uint8)


def init_llr_cross(v: np.ndarray, frob_norms: np.ndarray, sigma2: float,
                   dims: CrossDims | int) -> np.ndarray:
    """Initial LLRs for the cross-rotation virtual channel.

    The channel carries means +-1/sqrt(d_last) under Gaussian noise of
    variance (D/d_last) * sigma2 / ||block||^2, so

        llr = 2 * v * ||block||^2 / (sqrt(d_last) * (D/d_last) * sigma2).

    For the two-stage 64-dimensional layout this is v * ||block||^2 /
    (8 * sqrt(2) * sigma2).
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if not isinstance(dims, CrossDims):
        dims = CrossDims.from_total(int(dims))
    D = dims.total_dim
    d_last = dims.stage_dims[-1]
    v = np.asarray(v, dtype=float)
    norms = np.asarray(frob_norms, dtype=float)
    if v.size != norms.size * D:
        raise ValueError("one norm per block is required")
    scale = 2.0 * norms**2 / (np.sqrt(d_last) * (D / d_last) * sigma2)
    return (v.reshape(norms.size, D) * scale[:, None]).reshape(-1)


def init_llr_classic(v: np.ndarray, norms: np.ndarray, sigma2: float,
                     d: int) -> np.ndarray:
    """Initial LLRs for the single-stage d-dimensional virtual channel:
    llr = 2 * v * ||y_g||^2 / (sqrt(d) * sigma2).  At d = 1 this is the
    plain binary-input Gaussian channel LLR."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    v = np.asarray(v, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if v.size != norms.size * d:
        raise ValueError("one norm per d-block is required")
    scale = 2.0 * norms**2 / (np.sqrt(d) * sigma2)
    return (v.reshape(norms.size, d) * scale[:, None]).reshape(-1)


def _seg_prod(values: np.ndarray, code: LdpcCode, regular: bool) -> np.ndarray:
    if regular:
        return values.reshape(code.m, code.row_deg[0]).prod(axis=1)
    return np.multiply.reduceat(values, code.check_ptr[:-1])


def _seg_sum_var(values: np.ndarray, code: LdpcCode, regular: bool) -> np.ndarray:
    if regular:
        return values.reshape(code.n, code.col_deg[0]).sum(axis=1)
    return np.add.reduceat(values, code.var_ptr[:-1])


def _expand_chk(values: np.ndarray, code: LdpcCode, regular: bool) -> np.ndarray:
    if regular:
        return np.repeat(values, code.row_deg[0])
    return np.repeat(values, code.row_deg)


def _expand_var(values: np.ndarray, code: LdpcCode, regular: bool) -> np.ndarray:
    if regular:
        return np.repeat(values, code.col_deg[0])
    return np.repeat(values, code.col_deg)


def decode_syndrome(code: LdpcCode, llr: np.ndarray,
                    target_syndrome: np.ndarray,
                    max_iter: int = 200) -> tuple[np.ndarray, int, bool]:
    """Flooding sum-product decoding toward ``target_syndrome``.

    Returns (bits, iterations, converged).  Non-convergence within
    ``max_iter`` is reported through the flag, never raised; the bits are
    then the current hard decision.
    """
    llr = np.asarray(llr, dtype=float)
    if llr.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got {llr.shape}")
    syn = np.asarray(target_syndrome)
    if syn.shape != (code.m,):
        raise ValueError(f"expected {code.m} syndrome bits, got {syn.shape}")
    regular = code.is_regular()
    syn_sign = np.where(syn.astype(bool), -1.0, 1.0)

    llr = np.clip(llr, -LLR_CLIP, LLR_CLIP)
    vc = llr[code.var_of_edge]
    bits = (llr < 0).astype(np.uint8)

    for it in range(1, max_iter + 1):
        # check-node update: signed tanh products with leave-one-out division
        t = np.tanh(0.5 * vc)
        np.copysign(np.maximum(np.abs(t), 1e-300), t, out=t)
        prod = _seg_prod(t, code, regular)
        loo = _expand_chk(prod, code, regular)
        loo /= t
        np.clip(loo, -1.0, 1.0, out=loo)
        ab = np.abs(loo)
        with np.errstate(divide="ignore"):
            cv = np.log1p(ab)
            cv -= np.log1p(-ab)
        np.minimum(cv, LLR_CLIP, out=cv)
        np.copysign(cv, loo, out=cv)
        cv *= _expand_chk(syn_sign, code, regular)

        # variable-node update and hard decision
        cv_v = cv[code.by_var]
        tot = llr + _seg_sum_var(cv_v, code, regular)
        vc_v = _expand_var(tot, code, regular) - cv_v
        np.clip(vc_v, -LLR_CLIP, LLR_CLIP, out=vc_v)
        vc[code.by_var] = vc_v
        bits = (tot < 0).astype(np.uint8)

        if regular:
            par = bits[code.var_of_edge].reshape(
                code.m, code.row_deg[0]).sum(axis=1) & 1
        else:
            par = np.add.reduceat(
                bits[code.var_of_edge].astype(np.int64),
                code.check_ptr[:-1]) & 1
        if np.array_equal(par.astype(np.uint8), syn.astype(np.uint8)):
            return bits, it, True

    return bits, max_iter, False


# ---------------------------------------------------------------------------
# alist I/O and the desk-scale regular-code generator
# ---------------------------------------------------------------------------

def save_alist(code: LdpcCode, path) -> None:
    """Write the de-facto alist text layout (1-based, zero padded)."""
    lines = [f"{code.n} {code.m}",
             f"{code.col_deg.max()} {code.row_deg.max()}",
             " ".join(map(str, code.col_deg)),
             " ".join(map(str, code.row_deg))]
    cmax = int(code.col_deg.max())
    rmax = int(code.row_deg.max())
    chk_by_var = np.empty(code.n_edges, dtype=np.int64)
    # reconstruct check indices per edge, then group by variable
    check_of_edge = np.repeat(np.arange(code.m), code.row_deg)
    chk_by_var = check_of_edge[code.by_var]
    var_sorted = code.var_of_edge[code.by_var]
    for v in range(code.n):
        lo, hi = code.var_ptr[v], code.var_ptr[v + 1]
        entries = sorted(int(c) + 1 for c in chk_by_var[lo:hi])
        entries += [0] * (cmax - len(entries))
        lines.append(" ".join(map(str, entries)))
    for c in range(code.m):
        lo, hi = code.check_ptr[c], code.check_ptr[c + 1]
        entries = sorted(int(v) + 1 for v in code.var_of_edge[lo:hi])
        entries += [0] * (rmax - len(entries))
        lines.append(" ".join(map(str, entries)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_alist(path) -> LdpcCode:
    """Parse an alist file, validating the structural header."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 4:
        raise ValueError("malformed alist: truncated header")
    try:
        vals = list(map(int, tokens))
    except ValueError as exc:
        raise ValueError(f"malformed alist: non-integer token ({exc})") from None
    n, m, cmax, rmax = vals[0], vals[1], vals[2], vals[3]
    if n <= 0 or m <= 0:
        raise ValueError(f"malformed alist: bad dimensions {n} x {m}")
    pos = 4
    if len(vals) < pos + n + m:
        raise ValueError("malformed alist: missing degree lists")
    col_deg = vals[pos:pos + n]; pos += n
    row_deg = vals[pos:pos + m]; pos += m
    if max(col_deg) != cmax or max(row_deg) != rmax:
        raise ValueError("malformed alist: degree lists disagree with header")
    if sum(col_deg) != sum(row_deg):
        raise ValueError("malformed alist: edge counts disagree")
    checks, vars_ = [], []
    for v in range(n):
        row = vals[pos:pos + cmax]; pos += cmax
        entries = [e for e in row if e != 0]
        if len(entries) != col_deg[v]:
            raise ValueError(f"malformed alist: column {v} degree mismatch")
        for c in entries:
            if not (1 <= c <= m):
                raise ValueError(f"malformed alist: check index {c} out of range")
            checks.append(c - 1)
            vars_.append(v)
    # the per-check lists are redundant; accept truncated files without them
    return LdpcCode.from_edges(n, m, np.array(checks), np.array(vars_))


def generate_regular(n: int, col_weight: int, row_weight: int,
                     seed: int) -> LdpcCode:
    """Seeded (col_weight, row_weight)-regular code via the configuration
    model with duplicate-edge repair.  Degrees are met exactly."""
    if col_weight < 2 or row_weight <= col_weight:
        raise ValueError("need 2 <= col_weight < row_weight")
    if (n * col_weight) % row_weight != 0:
        raise ValueError(
            f"infeasible degrees: {n}*{col_weight} not divisible by {row_weight}")
    m = n * col_weight // row_weight
    rng = np.random.default_rng(seed)
    E = n * col_weight
    check_of_edge = np.repeat(np.arange(m, dtype=np.int64), row_weight)
    var_of_edge = np.repeat(np.arange(n, dtype=np.int64), col_weight)
    rng.shuffle(var_of_edge)
    for _ in range(1000):
        key = check_of_edge * n + var_of_edge
        order = np.argsort(key)
        dup = np.zeros(E, dtype=bool)
        sk = key[order]
        dup[order[1:]] = sk[1:] == sk[:-1]
        bad = np.flatnonzero(dup)
        if bad.size == 0:
            break
        partners = rng.integers(0, E, size=bad.size)
        for e, f in zip(bad, partners):
            var_of_edge[e], var_of_edge[f] = var_of_edge[f], var_of_edge[e]
    else:
        raise ValueError("could not remove duplicate edges; degrees too dense")
    return LdpcCode.from_edges(n, m, check_of_edge, var_of_edge)
