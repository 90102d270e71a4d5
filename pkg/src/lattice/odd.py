"""Site fields with coefficients in a finite Grassmann algebra.

An ``OddCoefficient`` stores one real array per monomial ε_I of m odd
generators: ``data[I]`` is the coefficient of ε_I, with I a bitmask and the
generators multiplied in increasing order. Plain lattice data is the m = 0
case. Generator 0 is reserved for the auxiliary parameter θ used to square
odd vector fields.
"""

from functools import lru_cache
from typing import List, Sequence, Tuple, Union

import numpy as np

from src.utils.reliability import OddParameterError

Operand = Union["OddCoefficient", np.ndarray, float, int]


def _inversions(i: int, j: int) -> int:
    count = 0
    b = 0
    while (1 << b) <= i:
        if i >> b & 1:
            count += bin(j & ((1 << b) - 1)).count("1")
        b += 1
    return count


@lru_cache(maxsize=None)
def product_table(m: int) -> Tuple[Tuple[int, int, int, int], ...]:
    """(I, J, I|J, sign) for every disjoint pair of monomials."""
    table = []
    for i in range(1 << m):
        for j in range(1 << m):
            if i & j:
                continue
            sign = -1 if _inversions(i, j) % 2 else 1
            table.append((i, j, i | j, sign))
    return tuple(table)


def mask(*generators: int) -> int:
    out = 0
    for g in generators:
        out |= 1 << g
    return out


class OddCoefficient:
    __array_ufunc__ = None

    def __init__(self, data: np.ndarray, m: int):
        data = np.asarray(data, dtype=float)
        if data.shape[0] != 1 << m:
            raise ValueError(f"expected {1 << m} monomial slots, got {data.shape[0]}")
        self.data = data
        self.m = m

    # construction

    @classmethod
    def even(cls, array, m: int = 0) -> "OddCoefficient":
        array = np.asarray(array, dtype=float)
        data = np.zeros((1 << m,) + array.shape)
        data[0] = array
        return cls(data, m)

    @classmethod
    def monomial(cls, generators: Sequence[int], array, m: int) -> "OddCoefficient":
        if any(g >= m for g in generators):
            raise OddParameterError(m, max(generators) + 1)
        array = np.asarray(array, dtype=float)
        data = np.zeros((1 << m,) + array.shape)
        data[mask(*generators)] = array
        return cls(data, m)

    @classmethod
    def zeros(cls, shape: Tuple[int, ...], m: int) -> "OddCoefficient":
        return cls(np.zeros((1 << m,) + tuple(shape)), m)

    @classmethod
    def wrap(cls, value: Operand, m: int = 0) -> "OddCoefficient":
        if isinstance(value, OddCoefficient):
            return value.lift(m) if value.m < m else value
        return cls.even(value, m)

    def lift(self, m: int) -> "OddCoefficient":
        if m == self.m:
            return self
        data = np.zeros((1 << m,) + self.shape)
        data[: 1 << self.m] = self.data
        return OddCoefficient(data, m)

    # inspection

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape[1:]

    @property
    def body(self) -> np.ndarray:
        return self.data[0]

    def component(self, m_mask: int) -> np.ndarray:
        if m_mask >= 1 << self.m:
            return np.zeros(self.shape)
        return self.data[m_mask]

    def is_even(self) -> bool:
        return all(not np.any(self.data[i]) for i in range(1 << self.m) if bin(i).count("1") % 2)

    def is_zero(self) -> bool:
        return not np.any(self.data)

    def __repr__(self):
        live = [i for i in range(1 << self.m) if np.any(self.data[i])]
        return f"OddCoefficient(m={self.m}, shape={self.shape}, monomials={live})"

    # linear structure

    def _pair(self, other: Operand) -> Tuple["OddCoefficient", "OddCoefficient"]:
        m = max(self.m, other.m if isinstance(other, OddCoefficient) else 0)
        return self.lift(m), OddCoefficient.wrap(other, m)

    def __add__(self, other: Operand) -> "OddCoefficient":
        a, b = self._pair(other)
        return OddCoefficient(a.data + b.data, a.m)

    __radd__ = __add__

    def __sub__(self, other: Operand) -> "OddCoefficient":
        a, b = self._pair(other)
        return OddCoefficient(a.data - b.data, a.m)

    def __rsub__(self, other: Operand) -> "OddCoefficient":
        a, b = self._pair(other)
        return OddCoefficient(b.data - a.data, a.m)

    def __neg__(self) -> "OddCoefficient":
        return OddCoefficient(-self.data, self.m)

    def __mul__(self, other: Operand) -> "OddCoefficient":
        if isinstance(other, (int, float)):
            return OddCoefficient(self.data * other, self.m)
        return einsum("...,...->...", self, other)

    def __rmul__(self, other: Operand) -> "OddCoefficient":
        if isinstance(other, (int, float)):
            return OddCoefficient(self.data * other, self.m)
        return einsum("...,...->...", other, self)

    def map(self, fn) -> "OddCoefficient":
        """Apply a real-linear map to every monomial coefficient at once."""
        return OddCoefficient(fn(self.data), self.m)

    def transpose(self, spec: str) -> "OddCoefficient":
        return self.map(lambda x: np.einsum(spec, x))

    def entry(self, *index: int) -> "OddCoefficient":
        return OddCoefficient(self.data[(Ellipsis,) + index], self.m)

    def partial(self, torus, axis: int) -> "OddCoefficient":
        return OddCoefficient(torus.partial(self.data, axis, offset=1), self.m)

    # nonlinear functions of even elements

    def _nilpotent_series(self, body_fn, coefficient) -> "OddCoefficient":
        """f(a0 + n) = Σ_k c_k(a0) n^k for scalar fields; n is nilpotent."""
        a0 = self.body
        n = OddCoefficient(self.data.copy(), self.m)
        n.data[0] = 0.0
        out = OddCoefficient.even(body_fn(a0), self.m)
        power = OddCoefficient.even(np.ones_like(a0), self.m)
        for k in range(1, self.m + 1):
            power = power * n
            if power.is_zero():
                break
            out = out + einsum("...,...->...", coefficient(k, a0), power)
        return out

    def power(self, p: float) -> "OddCoefficient":
        def coefficient(k, a0):
            c = 1.0
            for j in range(k):
                c *= (p - j) / (j + 1)
            return c * a0 ** (p - k)

        return self._nilpotent_series(lambda a0: a0 ** p, coefficient)

    def matrix_inverse(self) -> "OddCoefficient":
        """Neumann series (A0 + N)^-1 = Σ_k (-A0^-1 N)^k A0^-1."""
        inv0 = np.linalg.inv(self.body)
        n = OddCoefficient(self.data.copy(), self.m)
        n.data[0] = 0.0
        step = -einsum("...ij,...jk->...ik", inv0, n)
        term = OddCoefficient.even(inv0, self.m)
        out = term
        for _ in range(self.m):
            term = einsum("...ij,...jk->...ik", step, term)
            if term.is_zero():
                break
            out = out + term
        return out

    def determinant(self) -> "OddCoefficient":
        d = self.shape[-1]
        e = self.entry
        if d == 2:
            return e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0)
        if d == 3:
            return (e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                    - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                    + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0)))
        raise ValueError(f"determinant only for d = 2, 3, got {d}")

    # the auxiliary parameter

    def theta_times(self) -> "OddCoefficient":
        """θ·x with θ the generator in slot 0."""
        out = OddCoefficient.zeros(self.shape, self.m)
        for i in range(0, 1 << self.m, 2):
            out.data[i | 1] = self.data[i]
        return out

    def theta_part(self) -> "OddCoefficient":
        """y such that x = x|θ=0 + θ·y."""
        out = OddCoefficient.zeros(self.shape, self.m)
        for i in range(0, 1 << self.m, 2):
            out.data[i] = self.data[i | 1]
        return out


def einsum(spec: str, a: Operand, b: Operand) -> OddCoefficient:
    """Two-operand einsum in the Grassmann algebra, a to the left of b."""
    m = max(x.m for x in (a, b) if isinstance(x, OddCoefficient)) if any(
        isinstance(x, OddCoefficient) for x in (a, b)) else 0
    a = OddCoefficient.wrap(a, m)
    b = OddCoefficient.wrap(b, m)
    live_a = set(i for i in range(1 << m) if np.any(a.data[i]))
    live_b = set(j for j in range(1 << m) if np.any(b.data[j]))
    out = None
    for i, j, k, sign in product_table(m):
        if j not in live_b or i not in live_a:
            continue
        term = np.einsum(spec, a.data[i], b.data[j])
        if out is None:
            out = np.zeros((1 << m,) + term.shape)
        out[k] += sign * term
    if out is None:
        shape = np.einsum(spec, a.data[0], b.data[0]).shape
        out = np.zeros((1 << m,) + shape)
    return OddCoefficient(out, m)


def stack(items: List[OddCoefficient], axis: int) -> OddCoefficient:
    """Stack along a negative (component) axis."""
    if axis >= 0:
        raise ValueError("stack along component axes only (negative axis)")
    m = max(x.m for x in items)
    return OddCoefficient(np.stack([x.lift(m).data for x in items], axis=axis), m)
