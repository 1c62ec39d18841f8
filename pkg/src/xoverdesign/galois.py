"""Small finite fields GF(p^n), p^n <= 32.

Elements are integers 0..q-1 holding the coefficient vector of a polynomial
over GF(p) in base p (least significant digit = constant term).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

# monic irreducible polynomials, coefficients from the constant term upwards
IRREDUCIBLE = {
    (2, 2): (1, 1, 1),        # x^2 + x + 1
    (2, 3): (1, 1, 0, 1),     # x^3 + x + 1
    (2, 4): (1, 1, 0, 0, 1),  # x^4 + x + 1
    (2, 5): (1, 0, 1, 0, 0, 1),  # x^5 + x^2 + 1
    (3, 2): (1, 0, 1),        # x^2 + 1
    (3, 3): (1, 2, 0, 1),     # x^3 + 2x + 1
    (5, 2): (2, 0, 1),        # x^2 + 2
}

MAX_ORDER = 32


def prime_power(q: int) -> tuple[int, int] | None:
    """(p, n) with q = p^n, or None."""
    if q < 2:
        return None
    for p in range(2, q + 1):
        if q % p == 0:
            n = 0
            while q % p == 0:
                q //= p
                n += 1
            return (p, n) if q == 1 else None
    return None


@dataclass(frozen=True)
class GaloisField:
    p: int
    n: int
    add: np.ndarray
    mul: np.ndarray
    modulus: tuple[int, ...]

    @property
    def order(self) -> int:
        return self.p**self.n

    def neg(self, a: int) -> int:
        return int(np.flatnonzero(self.add[a] == 0)[0])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return int(np.flatnonzero(self.mul[a] == 1)[0])

    def polynomial_str(self) -> str:
        terms = []
        for e, c in reversed(list(enumerate(self.modulus))):
            if c == 0:
                continue
            mono = "" if e == 0 else ("x" if e == 1 else f"x^{e}")
            coef = "" if c == 1 and e else str(c)
            terms.append(coef + mono)
        return " + ".join(terms)


def _digits(a: int, p: int, n: int) -> list[int]:
    out = []
    for _ in range(n):
        out.append(a % p)
        a //= p
    return out


def _number(d: list[int], p: int) -> int:
    return sum(c * p**i for i, c in enumerate(d))


@functools.lru_cache(maxsize=None)
def galois_field(q: int) -> GaloisField:
    pn = prime_power(q)
    if pn is None or q > MAX_ORDER:
        raise ValueError(f"{q} is not a prime power <= {MAX_ORDER}")
    p, n = pn
    modulus = IRREDUCIBLE.get((p, n), (0, 1)) if n > 1 else (0, 1)
    add = np.zeros((q, q), dtype=np.int64)
    mul = np.zeros((q, q), dtype=np.int64)
    digits = [_digits(a, p, n) for a in range(q)]
    for a in range(q):
        for b in range(q):
            add[a, b] = _number([(x + y) % p for x, y in zip(digits[a], digits[b])], p)
            prod = [0] * (2 * n - 1)
            for i, x in enumerate(digits[a]):
                for j, y in enumerate(digits[b]):
                    prod[i + j] = (prod[i + j] + x * y) % p
            # reduce modulo the monic modulus
            for deg in range(2 * n - 2, n - 1, -1):
                c = prod[deg]
                if c:
                    for i, m in enumerate(modulus):
                        prod[deg - n + i] = (prod[deg - n + i] - c * m) % p
            mul[a, b] = _number(prod[:n], p)
    add.setflags(write=False)
    mul.setflags(write=False)
    return GaloisField(p, n, add, mul, modulus if n > 1 else (0, 1))


def element_to_label(a: int, q: int) -> int:
    """Treatment label of a field element: its integer code plus one."""
    return a + 1


def label_to_element(label: int, q: int) -> int:
    return label - 1
