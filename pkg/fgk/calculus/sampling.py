"""
乱数入力の生成

チェック名とシードから独立な numpy Generator を作るので、
チェックの実行順序や並列度によって入力が変わらない。
"""

import zlib
from typing import List, Sequence, Tuple

import numpy as np
from sympy.polys.domains import QQ
from sympy.polys.rings import PolyRing

from fgk.calculus.algebra import Polynomial, multi_indices, multi_indices_upto, monomial


def rng_for(seed: int, name: str) -> np.random.Generator:
    """チェック名ごとの乱数生成器"""
    return np.random.default_rng([seed, zlib.crc32(name.encode("utf-8"))])


def random_polynomial(rng: np.random.Generator, ring: PolyRing, max_degree: int,
                      n_terms: int = 3, coefficient_bound: int = 3, constant: bool = True) -> Polynomial:
    """次数 max_degree 以下、n_terms 項以下の整数係数多項式（零にはならない）"""
    exponents = multi_indices_upto(ring.ngens, max_degree, 0 if constant else 1)
    result = ring.zero
    while not result:
        picks = rng.choice(len(exponents), size=min(n_terms, len(exponents)), replace=False)
        for index in sorted(int(i) for i in picks):
            c = int(rng.integers(1, coefficient_bound + 1)) * (1 if rng.random() < 0.5 else -1)
            result += monomial(ring, exponents[index], QQ(c))
    return result


def random_pairs(rng: np.random.Generator, ring: PolyRing, count: int,
                 max_degree: int) -> List[Tuple[Polynomial, Polynomial]]:
    return [(random_polynomial(rng, ring, max_degree), random_polynomial(rng, ring, max_degree))
            for _ in range(count)]


def random_tuples(rng: np.random.Generator, ring: PolyRing, count: int, arity: int,
                  max_degree: int) -> List[Tuple[Polynomial, ...]]:
    return [tuple(random_polynomial(rng, ring, max_degree) for _ in range(arity)) for _ in range(count)]


def basis_monomials(ring: PolyRing, max_degree: int, start: int = 0) -> List[Polynomial]:
    """次数 start..max_degree の単項式（次数の昇順）"""
    return [monomial(ring, m) for m in multi_indices_upto(ring.ngens, max_degree, start)]


def variable_monomials(ring: PolyRing, positions: Sequence[int], max_degree: int) -> List[Polynomial]:
    """指定した変数だけからなる次数 1..max_degree の単項式"""
    result = []
    for degree in range(1, max_degree + 1):
        for exps in multi_indices(len(positions), degree):
            full = [0] * ring.ngens
            for p, e in zip(positions, exps):
                full[p] = e
            result.append(monomial(ring, full))
    return result
