"""Multi-index ranking and product tables for dense truncated jets.

Monomials are ranked in graded lexicographic order, so the coefficients of a
jet of degree ``d`` are a prefix of those of the same jet at any degree
``D >= d``.  Truncation is therefore a slice.
"""

from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb, factorial

import numpy as np


def num_coeffs(num_vars, max_degree):
    return comb(num_vars + max_degree, max_degree)


class JetTable:
    """Index bookkeeping for jets with ``num_vars`` variables up to ``max_degree``.

    Attributes
    ----------
    exps : ndarray, shape (ncoef, num_vars)
        Exponent vector of every ranked monomial.
    degree : ndarray, shape (ncoef,)
        Total degree of every monomial.
    offsets : ndarray, shape (max_degree + 2,)
        ``offsets[d]`` is the rank of the first monomial of degree ``d``.
    pair_i, pair_j, pair_k : ndarray
        All pairs ``(i, j)`` with ``deg(i) + deg(j) <= max_degree`` and
        ``k = rank(exps[i] + exps[j])``, sorted by ``k``.
    pair_ptr : ndarray, shape (ncoef + 1,)
        CSR offsets: the pairs producing ``k`` are ``pair_ptr[k]:pair_ptr[k+1]``.
    """

    def __init__(self, num_vars, max_degree):
        self.num_vars = num_vars
        self.max_degree = max_degree
        rows = []
        for d in range(max_degree + 1):
            for combo in combinations_with_replacement(range(num_vars), d):
                e = [0] * num_vars
                for v in combo:
                    e[v] += 1
                rows.append(e)
        self.exps = np.array(rows, dtype=np.int64).reshape(-1, num_vars)
        self.ncoef = len(rows)
        self.degree = self.exps.sum(axis=1)
        self.offsets = np.searchsorted(self.degree, np.arange(max_degree + 2))
        self._base = max_degree + 1
        self._weights = self._base ** np.arange(num_vars, dtype=np.int64)
        codes = self.exps @ self._weights
        self._code_order = np.argsort(codes)
        self._codes_sorted = codes[self._code_order]
        self.factorials = np.array(
            [np.prod([factorial(int(m)) for m in row]) for row in self.exps], dtype=float
        )
        self._build_pairs()
        self._deriv_cache = {}

    def rank(self, exps):
        """Rank of each exponent vector (last axis) in this table."""
        exps = np.asarray(exps, dtype=np.int64)
        codes = exps @ self._weights
        pos = np.searchsorted(self._codes_sorted, codes)
        return self._code_order[pos]

    def index_of(self, multi_index):
        multi_index = tuple(int(m) for m in multi_index)
        if len(multi_index) != self.num_vars:
            raise IndexError(
                f"multi-index has {len(multi_index)} entries, expected {self.num_vars}"
            )
        if min(multi_index) < 0 or sum(multi_index) > self.max_degree:
            raise IndexError(f"multi-index {multi_index} outside degree {self.max_degree}")
        return int(self.rank(np.array(multi_index)))

    def _build_pairs(self):
        deg = self.degree
        ii, jj = [], []
        for i in range(self.ncoef):
            room = self.max_degree - deg[i]
            js = np.arange(self.offsets[room + 1])
            ii.append(np.full(js.size, i, dtype=np.int64))
            jj.append(js)
        pi = np.concatenate(ii)
        pj = np.concatenate(jj)
        pk = self.rank(self.exps[pi] + self.exps[pj])
        order = np.lexsort((pi, pk))
        self.pair_i = np.ascontiguousarray(pi[order])
        self.pair_j = np.ascontiguousarray(pj[order])
        self.pair_k = np.ascontiguousarray(pk[order])
        self.pair_ptr = np.searchsorted(self.pair_k, np.arange(self.ncoef + 1)).astype(np.int64)
        self.npairs = self.pair_i.size

    def deriv_map(self, var):
        """Gather indices and multipliers for d/dz_var, result at degree max_degree-1.

        Entry ``m`` of the derivative jet is ``mult[m] * coeffs[src[m]]``.
        """
        if var not in self._deriv_cache:
            n_out = self.offsets[self.max_degree]
            shifted = self.exps[:n_out].copy()
            shifted[:, var] += 1
            src = self.rank(shifted)
            mult = (self.exps[:n_out, var] + 1).astype(float)
            self._deriv_cache[var] = (src, mult)
        return self._deriv_cache[var]


@lru_cache(maxsize=None)
def get_table(num_vars, max_degree):
    return JetTable(num_vars, max_degree)
