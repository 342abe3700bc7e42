"""Sparse multivariate polynomials over complex coefficients.

This is the substrate for every critical-point system in the package:
formal differentiation, (batched) evaluation, per-equation scaling,
multihomogeneous Bezout counts and a JSON dump format used by the
solution caches.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Polynomial",
    "PolynomialSystem",
    "CompiledSystem",
    "differentiate",
    "evaluate_system",
    "scale_system",
    "bezout_count",
]

Exponents = tuple[int, ...]


class Polynomial:
    """Sparse polynomial: exponent vector -> complex coefficient.

    Zero coefficients are never stored; exponent tuples always match the
    arity of the (ordered, shared) variable table.
    """

    __slots__ = ("variables", "terms")

    def __init__(self, variables: Sequence[str], terms: Mapping[Exponents, complex] | None = None):
        self.variables: tuple[str, ...] = tuple(variables)
        clean: dict[Exponents, complex] = {}
        if terms:
            nv = len(self.variables)
            for exps, coeff in terms.items():
                if len(exps) != nv:
                    raise ValueError(f"exponent arity {len(exps)} != {nv} variables")
                c = complex(coeff)
                if c != 0:
                    clean[tuple(int(e) for e in exps)] = c
        self.terms: dict[Exponents, complex] = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, variables: Sequence[str]) -> "Polynomial":
        return cls(variables, {})

    @classmethod
    def constant(cls, variables: Sequence[str], value: complex) -> "Polynomial":
        zero = (0,) * len(tuple(variables))
        return cls(variables, {zero: value})

    @classmethod
    def variable(cls, variables: Sequence[str], name: str) -> "Polynomial":
        variables = tuple(variables)
        idx = variables.index(name)
        exps = tuple(1 if i == idx else 0 for i in range(len(variables)))
        return cls(variables, {exps: 1.0})

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.variables != self.variables:
                raise ValueError("variable tables differ")
            return other
        return Polynomial.constant(self.variables, other)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        terms = dict(self.terms)
        for exps, c in other.terms.items():
            s = terms.get(exps, 0.0) + c
            if s == 0:
                terms.pop(exps, None)
            else:
                terms[exps] = s
        return Polynomial(self.variables, terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = complex(other)
            if c == 0:
                return Polynomial.zero(self.variables)
            return Polynomial(self.variables, {e: v * c for e, v in self.terms.items()})
        other = self._coerce(other)
        out: dict[Exponents, complex] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(key, 0.0) + c1 * c2
                if s == 0:
                    out.pop(key, None)
                else:
                    out[key] = s
        return Polynomial(self.variables, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if n < 0:
            raise ValueError("negative power")
        result = Polynomial.constant(self.variables, 1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.variables == other.variables
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.variables, frozenset(self.terms.items())))

    # -- queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def degree_in(self, var_indices: Iterable[int]) -> int:
        idx = tuple(var_indices)
        if not self.terms:
            return 0
        return max(sum(e[i] for i in idx) for e in self.terms)

    def max_abs_coeff(self) -> float:
        if not self.terms:
            return 0.0
        return max(abs(c) for c in self.terms.values())

    def differentiate(self, var: str) -> "Polynomial":
        if var not in self.variables:
            raise ValueError(f"unknown variable {var!r}")
        i = self.variables.index(var)
        out: dict[Exponents, complex] = {}
        for exps, c in self.terms.items():
            k = exps[i]
            if k == 0:
                continue
            key = exps[:i] + (k - 1,) + exps[i + 1 :]
            s = out.get(key, 0.0) + c * k
            if s == 0:
                out.pop(key, None)
            else:
                out[key] = s
        return Polynomial(self.variables, out)

    def evaluate(self, point: Sequence[complex]) -> complex:
        if len(point) != len(self.variables):
            raise ValueError("point arity mismatch")
        total = 0.0 + 0.0j
        for exps, c in self.terms.items():
            m = c
            for x, e in zip(point, exps):
                if e:
                    m *= x**e
            total += m
        return total

    def substitute(self, assignments: Mapping[str, complex]) -> "Polynomial":
        """Pin some variables to numeric values; result keeps the full table."""
        idx = {self.variables.index(k): complex(v) for k, v in assignments.items()}
        out: dict[Exponents, complex] = {}
        for exps, c in self.terms.items():
            coeff = c
            new = list(exps)
            for i, v in idx.items():
                if exps[i]:
                    coeff *= v ** exps[i]
                    new[i] = 0
            key = tuple(new)
            s = out.get(key, 0.0) + coeff
            if s == 0:
                out.pop(key, None)
            else:
                out[key] = s
        return Polynomial(self.variables, out)

    def drop_variables(self, names: Iterable[str]) -> "Polynomial":
        """Remove variables the polynomial does not actually use."""
        drop = {self.variables.index(n) for n in names}
        for exps in self.terms:
            if any(exps[i] for i in drop):
                raise ValueError("cannot drop a used variable")
        keep = [i for i in range(len(self.variables)) if i not in drop]
        newvars = tuple(self.variables[i] for i in keep)
        return Polynomial(newvars, {tuple(e[i] for i in keep): c for e, c in self.terms.items()})

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        bits = []
        for exps, c in sorted(self.terms.items()):
            mono = "*".join(
                f"{v}^{e}" if e > 1 else v for v, e in zip(self.variables, exps) if e
            )
            bits.append(f"({c}){'*' + mono if mono else ''}")
        return "Polynomial(" + " + ".join(bits) + ")"


def differentiate(p: Polynomial, var: str) -> Polynomial:
    """Formal partial derivative of ``p`` with respect to ``var``."""
    return p.differentiate(var)


@dataclass
class PolynomialSystem:
    """A list of polynomials over one shared variable table.

    ``grouping`` (optional) partitions the table for multihomogeneous
    path counting and start systems.
    """

    equations: list[Polynomial]
    grouping: list[list[str]] | None = None

    def __post_init__(self):
        if not self.equations:
            raise ValueError("empty system")
        table = self.equations[0].variables
        for eq in self.equations:
            if eq.variables != table:
                raise ValueError("equations do not share one variable table")
        if self.grouping is not None:
            flat = [v for g in self.grouping for v in g]
            if sorted(flat) != sorted(table):
                raise ValueError("grouping does not partition the variable table")

    @property
    def variables(self) -> tuple[str, ...]:
        return self.equations[0].variables

    @property
    def n_equations(self) -> int:
        return len(self.equations)

    def is_square(self) -> bool:
        return len(self.equations) == len(self.variables)

    def degrees(self) -> list[int]:
        return [eq.degree() for eq in self.equations]

    def evaluate(self, point: Sequence[complex]) -> np.ndarray:
        return np.array([eq.evaluate(point) for eq in self.equations], dtype=complex)

    def jacobian(self) -> list[list[Polynomial]]:
        return [[eq.differentiate(v) for v in self.variables] for eq in self.equations]

    def jacobian_at(self, point: Sequence[complex]) -> np.ndarray:
        jac = self.jacobian()
        return np.array(
            [[p.evaluate(point) for p in row] for row in jac], dtype=complex
        )

    def scale_factors(self) -> np.ndarray:
        """Max absolute coefficient per equation (the scaling divisors)."""
        out = []
        for eq in self.equations:
            m = eq.max_abs_coeff()
            if m == 0:
                raise ValueError("identically zero equation cannot be scaled")
            out.append(m)
        return np.array(out)

    # -- dump format ---------------------------------------------------

    def dump(self) -> str:
        """JSON text with variable table, grouping and exact coefficients."""
        eqs = []
        for eq in self.equations:
            terms = [
                {"exp": list(exps), "re": repr(c.real), "im": repr(c.imag)}
                for exps, c in sorted(eq.terms.items())
            ]
            eqs.append(terms)
        doc = {
            "format": "singdist-polysys-1",
            "variables": list(self.variables),
            "grouping": self.grouping,
            "equations": eqs,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def load(cls, text: str) -> "PolynomialSystem":
        doc = json.loads(text)
        if doc.get("format") != "singdist-polysys-1":
            raise ValueError("not a polynomial system dump")
        table = tuple(doc["variables"])
        eqs = []
        for terms in doc["equations"]:
            d = {
                tuple(t["exp"]): complex(float(t["re"]), float(t["im"]))
                for t in terms
            }
            eqs.append(Polynomial(table, d))
        grouping = doc.get("grouping")
        return cls(eqs, grouping=[list(g) for g in grouping] if grouping else None)


def evaluate_system(system: PolynomialSystem, point: Sequence[complex]) -> np.ndarray:
    """Componentwise evaluation; arity mismatches are rejected."""
    if len(point) != len(system.variables):
        raise ValueError("point arity mismatch")
    return system.evaluate(point)


def scale_system(system: PolynomialSystem) -> PolynomialSystem:
    """Divide each equation by its max |coefficient| (zero sets unchanged)."""
    factors = system.scale_factors()
    eqs = [eq * (1.0 / m) for eq, m in zip(system.equations, factors)]
    return PolynomialSystem(eqs, grouping=system.grouping)


def bezout_count(system: PolynomialSystem, grouping: Sequence[Sequence[str]] | None = None) -> int:
    """m-homogeneous Bezout number for a variable partition.

    With the trivial one-group partition this is the classical total-degree
    count (product of the equation degrees).  The general count is the
    coefficient of ``prod_a t_a^{k_a}`` in ``prod_j sum_a d_{j,a} t_a`` where
    ``k_a`` is the size of group ``a`` and ``d_{j,a}`` the degree of equation
    ``j`` in the group-``a`` variables.
    """
    if grouping is None:
        grouping = system.grouping
    if grouping is None:
        grouping = [list(system.variables)]
    table = system.variables
    flat = [v for g in grouping for v in g]
    if sorted(flat) != sorted(table):
        raise ValueError("grouping does not partition the variable table")
    group_idx = [tuple(table.index(v) for v in g) for g in grouping]
    sizes = tuple(len(g) for g in grouping)
    multidegrees = [
        tuple(eq.degree_in(idx) for idx in group_idx) for eq in system.equations
    ]
    # dynamic programme over equations; state = capacity used per group
    states: dict[tuple[int, ...], int] = {(0,) * len(grouping): 1}
    for mdeg in multidegrees:
        nxt: dict[tuple[int, ...], int] = {}
        for used, ways in states.items():
            for a, d in enumerate(mdeg):
                if d == 0 or used[a] >= sizes[a]:
                    continue
                key = used[:a] + (used[a] + 1,) + used[a + 1 :]
                nxt[key] = nxt.get(key, 0) + ways * d
        states = nxt
        if not states:
            return 0
    return states.get(sizes, 0)


# ---------------------------------------------------------------------------
# batched evaluation
# ---------------------------------------------------------------------------


def _monomial_plan(monos: set[Exponents], n_vars: int):
    """Close a monomial set under division chains and order it so every
    monomial is a previously built monomial times one variable."""
    monos = set(monos)
    monos.add((0,) * n_vars)
    stack = list(monos)
    while stack:
        exps = stack.pop()
        if sum(exps) == 0:
            continue
        i = next(k for k, e in enumerate(exps) if e)
        parent = exps[:i] + (exps[i] - 1,) + exps[i + 1 :]
        if parent not in monos:
            monos.add(parent)
            stack.append(parent)
    ordered = sorted(monos, key=lambda e: (sum(e), e))
    index = {e: i for i, e in enumerate(ordered)}
    parents = np.full(len(ordered), -1, dtype=np.int64)
    build_var = np.zeros(len(ordered), dtype=np.int64)
    for e, i in index.items():
        if sum(e) == 0:
            continue
        j = next(k for k, v in enumerate(e) if v)
        parents[i] = index[e[:j] + (e[j] - 1,) + e[j + 1 :]]
        build_var[i] = j
    return ordered, index, parents, build_var


@dataclass
class CompiledPolys:
    """A list of polynomials over one table, compiled for batched evaluation."""

    variables: tuple[str, ...]
    build_parent: np.ndarray
    build_var: np.ndarray
    coeffs: np.ndarray  # (n_monos, n_polys)

    @classmethod
    def compile(cls, polys: Sequence[Polynomial]) -> "CompiledPolys":
        table = polys[0].variables
        monos: set[Exponents] = set()
        for p in polys:
            if p.variables != table:
                raise ValueError("polynomials do not share one variable table")
            monos.update(p.terms.keys())
        ordered, index, parents, build_var = _monomial_plan(monos, len(table))
        coeffs = np.zeros((len(ordered), len(polys)), dtype=complex)
        for j, p in enumerate(polys):
            for exps, c in p.terms.items():
                coeffs[index[exps], j] = c
        return cls(table, parents, build_var, coeffs)

    def eval(self, Z: np.ndarray) -> np.ndarray:
        """Values (n_points, n_polys) at points Z (n_points, n_vars)."""
        Z = np.atleast_2d(Z)
        M = np.empty((Z.shape[0], len(self.build_parent)), dtype=complex)
        M[:, 0] = 1.0
        for i in range(1, M.shape[1]):
            M[:, i] = M[:, self.build_parent[i]] * Z[:, self.build_var[i]]
        return M @ self.coeffs


@dataclass
class CompiledSystem:
    """System + Jacobian compiled onto one shared monomial basis.

    Monomials are built incrementally (each one is a previously built
    monomial times one variable), so a batch evaluation costs one complex
    multiply per (path, monomial) plus two dense matmuls.
    """

    variables: tuple[str, ...]
    exponents: np.ndarray        # (n_monos, n_vars) int
    build_parent: np.ndarray     # (n_monos,) int; -1 for the constant monomial
    build_var: np.ndarray        # (n_monos,) int
    coeff_sys: np.ndarray        # (n_monos, n_eq) complex
    coeff_jac: np.ndarray        # (n_monos, n_eq * n_vars) complex
    n_eq: int = 0

    @classmethod
    def compile(cls, system: PolynomialSystem) -> "CompiledSystem":
        table = system.variables
        nv = len(table)
        jac = system.jacobian()
        polys = list(system.equations) + [p for row in jac for p in row]

        monos: set[Exponents] = set()
        for p in polys:
            monos.update(p.terms.keys())
        ordered, index, parents, build_var = _monomial_plan(monos, nv)

        n_eq = len(system.equations)
        coeff_sys = np.zeros((len(ordered), n_eq), dtype=complex)
        for j, eq in enumerate(system.equations):
            for exps, c in eq.terms.items():
                coeff_sys[index[exps], j] = c
        coeff_jac = np.zeros((len(ordered), n_eq * nv), dtype=complex)
        for j, row in enumerate(jac):
            for k, p in enumerate(row):
                col = j * nv + k
                for exps, c in p.terms.items():
                    coeff_jac[index[exps], col] = c
        return cls(
            variables=table,
            exponents=np.array(ordered, dtype=np.int64),
            build_parent=parents,
            build_var=build_var,
            coeff_sys=coeff_sys,
            coeff_jac=coeff_jac,
            n_eq=n_eq,
        )

    def monomials(self, Z: np.ndarray) -> np.ndarray:
        """Monomial table (n_paths, n_monos) for points Z (n_paths, n_vars)."""
        Z = np.atleast_2d(Z)
        n = Z.shape[0]
        M = np.empty((n, len(self.build_parent)), dtype=complex)
        M[:, 0] = 1.0
        for i in range(1, M.shape[1]):
            M[:, i] = M[:, self.build_parent[i]] * Z[:, self.build_var[i]]
        return M

    def eval_batch(self, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values (n, n_eq) and Jacobians (n, n_eq, n_vars) at a batch."""
        M = self.monomials(Z)
        vals = M @ self.coeff_sys
        nv = len(self.variables)
        jacs = (M @ self.coeff_jac).reshape(M.shape[0], self.n_eq, nv)
        return vals, jacs
