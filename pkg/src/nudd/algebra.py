"""
Binary generator labels and the tensor-Pauli operators they name.

A label is a bit vector ``(a_L, ..., a_1)`` written most-significant level
first. For an ``m``-qubit system ``L = 2m`` and the pair ``(a_{2j}, a_{2j-1})``
selects the Pauli factor on qubit ``j``::

    (0, 0) -> 1      (1, 0) -> X      (1, 1) -> Y      (0, 1) -> Z

Multiplying two tensor-Paulis XORs their labels and produces a phase in
``{1, i, -1, -i}``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    'GeneratorLabel', 'PauliOperator', 'xor_add', 'pauli_of',
    'pauli_multiply', 'all_labels', 'PAULI',
]

PAULI = {
    'I': np.eye(2, dtype=complex),
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}

# (a_{2j}, a_{2j-1}) -> single-qubit Pauli
_PAIR_TO_NAME = {(0, 0): 'I', (1, 0): 'X', (1, 1): 'Y', (0, 1): 'Z'}
_NAME_TO_PAIR = {v: k for k, v in _PAIR_TO_NAME.items()}


@dataclass(frozen=True)
class GeneratorLabel:
    """Bit vector ``(a_L, ..., a_1)``; ``bits[0]`` is the highest level."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise ValueError('a generator label needs at least one bit')
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f'label bits must be 0 or 1, got {self.bits}')
        object.__setattr__(self, 'bits', bits)

    @classmethod
    def from_string(cls, text: str) -> GeneratorLabel:
        text = text.strip()
        if not text or set(text) - {'0', '1'}:
            raise ValueError(f'not a bit string: {text!r}')
        return cls(tuple(int(c) for c in text))

    @classmethod
    def from_int(cls, value: int, length: int) -> GeneratorLabel:
        """Label whose level-1 bit is the least significant bit of ``value``."""
        if not 0 <= value < 2**length:
            raise ValueError(f'{value} does not fit in {length} bits')
        return cls(tuple((value >> (length - 1 - i)) & 1 for i in range(length)))

    @classmethod
    def zero(cls, length: int) -> GeneratorLabel:
        return cls((0,)*length)

    def __str__(self) -> str:
        return ''.join(map(str, self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def __xor__(self, other: GeneratorLabel) -> GeneratorLabel:
        return xor_add(self, other)

    def __int__(self) -> int:
        return reduce(lambda acc, b: (acc << 1) | b, self.bits, 0)

    def bit(self, level: int) -> int:
        """Component ``a_r`` for level ``r`` (1-based, level 1 least significant)."""
        return self.bits[len(self.bits) - level]

    @property
    def is_zero(self) -> bool:
        return not any(self.bits)

    @property
    def lowest_level(self) -> int:
        """Smallest level ``r`` with ``a_r = 1``."""
        for r in range(1, len(self.bits) + 1):
            if self.bit(r):
                return r
        raise ValueError('the zero label has no set level')

    def dot(self, components: Sequence[int]) -> int:
        """``sum_r a_r l_r`` against a multi-index in the same (high-first) order."""
        if len(components) != len(self.bits):
            raise ValueError('label and index lengths differ')
        return sum(a*l for a, l in zip(self.bits, components))


def all_labels(length: int) -> Iterator[GeneratorLabel]:
    for bits in itertools.product((0, 1), repeat=length):
        yield GeneratorLabel(bits)


def xor_add(alpha: GeneratorLabel, other: GeneratorLabel) -> GeneratorLabel:
    """Componentwise addition mod 2."""
    if len(alpha) != len(other):
        raise ValueError(f'label lengths differ: {len(alpha)} vs {len(other)}')
    return GeneratorLabel(tuple(a ^ b for a, b in zip(alpha.bits, other.bits)))


@dataclass(frozen=True, eq=False)
class PauliOperator:
    """Hermitian tensor-Pauli ``matrix`` with a tracked scalar ``phase``."""

    label: GeneratorLabel
    matrix: np.ndarray
    phase: complex = 1

    @property
    def names(self) -> str:
        """Per-qubit factors, qubit ``m`` first, e.g. ``'ZI'``."""
        b = self.label.bits
        return ''.join(_PAIR_TO_NAME[b[i], b[i + 1]] for i in range(0, len(b), 2))

    def full(self) -> np.ndarray:
        return self.phase*self.matrix


def _check_pauli_length(alpha: GeneratorLabel, m: int | None) -> int:
    if len(alpha) % 2:
        raise ValueError('Pauli labels need an even number of bits (two per qubit)')
    if m is not None and len(alpha) != 2*m:
        raise ValueError(f'label has {len(alpha)} bits, expected {2*m} for m={m}')
    return len(alpha)//2


def pauli_of(alpha: GeneratorLabel, m: int | None = None) -> PauliOperator:
    """The ``2^m``-dimensional operator ``sigma^(m) x ... x sigma^(1)`` for ``alpha``."""
    _check_pauli_length(alpha, m)
    b = alpha.bits
    factors = [PAULI[_PAIR_TO_NAME[b[i], b[i + 1]]] for i in range(0, len(b), 2)]
    return PauliOperator(alpha, reduce(np.kron, factors))


def pauli_from_names(names: str) -> GeneratorLabel:
    """Inverse of :attr:`PauliOperator.names`, e.g. ``'XZ'`` for m=2."""
    try:
        return GeneratorLabel(tuple(b for n in names.upper() for b in _NAME_TO_PAIR[n]))
    except KeyError as err:
        raise ValueError(f'unknown Pauli name in {names!r}') from err


def _single_phase(p: str, q: str) -> complex:
    prod = PAULI[p] @ PAULI[q]
    r = PAULI[_PAIR_TO_NAME[tuple(x ^ y for x, y in zip(_NAME_TO_PAIR[p], _NAME_TO_PAIR[q]))]]
    idx = np.unravel_index(np.argmax(np.abs(r)), r.shape)
    return complex(np.round(prod[idx]/r[idx]))


_PHASE_TABLE = {(p, q): _single_phase(p, q) for p in 'IXYZ' for q in 'IXYZ'}


def pauli_multiply(alpha: GeneratorLabel,
                   other: GeneratorLabel) -> tuple[GeneratorLabel, complex]:
    """Return ``(alpha ^ other, phase)`` with ``S_alpha S_other = phase S_(alpha^other)``."""
    _check_pauli_length(alpha, None)
    if len(alpha) != len(other):
        raise ValueError(f'label lengths differ: {len(alpha)} vs {len(other)}')
    a, b = pauli_of(alpha).names, pauli_of(other).names
    phase = reduce(lambda acc, pq: acc*_PHASE_TABLE[pq], zip(a, b), 1 + 0j)
    return xor_add(alpha, other), phase
