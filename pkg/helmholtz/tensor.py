#!/usr/bin/env python

"""
Tensor-product kernels over element nodes

A Field3 is a float64 numpy array whose last three axes are (n3, n2, n1).
C order makes direction 1 the fastest index, so the flat index of node
(i1, i2, i3) is i1 + n1*i2 + n1*n2*i3. Leading axes, if any, index elements
and every kernel broadcasts over them.

The Kronecker convention follows the flat index: kron3_apply(A3, A2, A1, u)
equals np.kron(A3, np.kron(A2, A1)) @ u.ravel(), the rightmost factor acting
along direction 1.

Multiplications are counted only inside a counting() context:

>>> with counting() as counter:
...     v = kron3_apply(A, A, A, u)
>>> counter.count
"""

import logging
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator, Optional

import numpy as np
import numpy.typing as npt

from .helpers import HelmholtzError

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]

# Field over the nodes of one or more elements, last axes (n3, n2, n1)
Field3 = Array


class DimensionError(HelmholtzError):
    pass


class TensorError(HelmholtzError):
    pass


class MulCounter:
    """Accumulator of floating point multiplications"""

    def __init__(self) -> None:
        self.count = 0

    def add(self, n: int) -> None:
        if n < 0:
            raise TensorError(f"negative multiplication count {n}")
        self.count += int(n)

    def __repr__(self) -> str:
        return f"MulCounter(count={self.count})"


_active_counter: ContextVar[Optional[MulCounter]] = ContextVar(
    "active_counter", default=None
)


@contextmanager
def counting(counter: Optional[MulCounter] = None) -> Iterator[MulCounter]:
    """
    Count multiplications of all kernels called inside the block

    Contexts nest: on exit, the multiplications of an inner counter are
    also added to the enclosing one.
    """

    counter = counter if counter is not None else MulCounter()
    outer = _active_counter.get()
    start = counter.count
    token = _active_counter.set(counter)

    try:
        yield counter
    finally:
        _active_counter.reset(token)
        if outer is not None and outer is not counter:
            outer.add(counter.count - start)


def record(n: int) -> None:
    """Add n multiplications to the active counter (no-op when not counting)"""
    counter = _active_counter.get()
    if counter is not None:
        counter.add(n)


def _check_axis(axis: int, u: Array) -> None:
    if axis not in (1, 2, 3):
        raise DimensionError(f"axis must be 1, 2 or 3, got {axis}")
    if u.ndim < 3:
        raise DimensionError(f"expected a rank-3 field, got shape {u.shape}")


def apply_axis(A: Array, axis: int, u: Field3) -> Field3:
    """
    Contract the matrix A (n_out x n_in) against direction `axis` of u

    The other directions are left untouched. Adds n_out * n_in * (product of
    the other dimensions) to the active counter.
    """

    _check_axis(axis, u)

    if A.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {A.shape}")

    n_out, n_in = A.shape

    if u.shape[-axis] != n_in:
        raise DimensionError(
            f"matrix of shape {A.shape} does not match direction {axis} "
            f"of field with shape {u.shape}"
        )

    if axis == 1:
        out = u @ A.T
    elif axis == 2:
        out = A @ u
    else:
        n3, n2, n1 = u.shape[-3:]
        flat = u.reshape(u.shape[:-3] + (n3, n2 * n1))
        out = (A @ flat).reshape(u.shape[:-3] + (n_out, n2, n1))

    record(n_out * u.size)

    return out


def kron3_apply(
    A3: Optional[Array], A2: Optional[Array], A1: Optional[Array], u: Field3
) -> Field3:
    """
    Return (A3 x A2 x A1) u by three axis applications (direction 1, 2, 3)

    A factor given as None is the identity and costs nothing.
    """

    out = u
    for axis, A in ((1, A1), (2, A2), (3, A3)):
        if A is not None:
            out = apply_axis(A, axis, out)

    return out


def kron2_apply(A2: Optional[Array], A1: Optional[Array], f: Array) -> Array:
    """
    Return (A2 x A1) f for a field over two directions, last axes (n2, n1)
    """

    if f.ndim < 2:
        raise DimensionError(f"expected a rank-2 field, got shape {f.shape}")

    out = f

    if A1 is not None:
        if A1.shape[1] != out.shape[-1]:
            raise DimensionError(f"matrix {A1.shape} does not match field {f.shape}")
        record(A1.shape[0] * out.size)
        out = out @ A1.T

    if A2 is not None:
        if A2.shape[1] != out.shape[-2]:
            raise DimensionError(f"matrix {A2.shape} does not match field {f.shape}")
        record(A2.shape[0] * out.size)
        out = A2 @ out

    return out


def expand_axis(f: Array, vector: Array, axis: int) -> Field3:
    """
    Outer product of a field over two directions with a vector along `axis`

    f holds the two remaining directions in their natural (slow, fast) order.
    """

    if axis not in (1, 2, 3):
        raise DimensionError(f"axis must be 1, 2 or 3, got {axis}")

    shape = (-1,) + (1,) * (axis - 1)
    out = np.expand_dims(f, -axis) * vector.reshape(shape)

    record(out.size)

    return out


def contract_axis(u: Field3, vector: Array, axis: int) -> Array:
    """
    Contract direction `axis` of u with a vector

    Returns a field over the two remaining directions in (slow, fast) order.
    """

    _check_axis(axis, u)

    if u.shape[-axis] != vector.shape[0]:
        raise DimensionError(
            f"vector of length {vector.shape[0]} does not match direction {axis} "
            f"of field with shape {u.shape}"
        )

    record(u.size)

    return np.moveaxis(u, -axis, -1) @ vector


def diag3_build(a: Array, b: Array, c: Array, d: Array) -> Field3:
    """
    Eigenspace diagonal of the interior operator

    Entry (i3, i2, i1) is d0 + d1*c[i1] + d2*b[i2] + d3*a[i3], so a holds the
    eigenvalues of direction 3 and c those of direction 1. d has shape
    (..., 4); the leading axes become leading axes of the result.

    Raises TensorError if any entry is non-positive.
    """

    d = np.asarray(d, dtype=np.float64)

    if d.shape[-1] != 4:
        raise DimensionError(f"expected coefficients of shape (..., 4), got {d.shape}")

    def coefficient(k: int) -> Array:
        return d[..., k, None, None, None]

    D = (
        coefficient(0)
        + coefficient(1) * c[None, None, :]
        + coefficient(2) * b[None, :, None]
        + coefficient(3) * a[:, None, None]
    )

    if np.any(D <= 0.0):
        raise TensorError(
            f"non-positive eigenspace diagonal entry (min {D.min():g}), "
            "check metric coefficients and the Helmholtz parameter"
        )

    return D
