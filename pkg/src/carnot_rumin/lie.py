"""Stratified (Carnot) Lie algebras with exact structure constants.

Basis indices are 0-based internally and 1-based in every serialized or
printed form (``X1 .. XN``).
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property

from . import linalg
from .scalars import Q, ZERO, q_str, to_q

DEFAULT_BASIS_CAP = 64
SCHEMA_VERSION = 1


class AlgebraValidationError(ValueError):
    """Raised when an algebra violates one of the structural invariants.

    ``invariant`` is one of: antisymmetry, jacobi, grading, stratification,
    layers, cap, schema.
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


@dataclass(frozen=True, eq=False)
class StratifiedLieAlgebra:
    layers: tuple[int, ...]
    # (i, j) with i < j -> {k: c^k_ij}
    brackets: dict = field(default_factory=dict)
    name: str = "custom"

    def __post_init__(self):
        clean = {}
        for (i, j), row in self.brackets.items():
            row = {k: to_q(v) for k, v in row.items() if to_q(v) != 0}
            if row:
                clean[(i, j)] = row
        object.__setattr__(self, "brackets", clean)
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def dim(self) -> int:
        return len(self.layers)

    @property
    def step(self) -> int:
        return max(self.layers) if self.layers else 0

    @property
    def n_generators(self) -> int:
        return sum(1 for d in self.layers if d == 1)

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return tuple(self.layers.count(ell) for ell in range(1, self.step + 1))

    @property
    def homogeneous_dimension(self) -> int:
        return sum(self.layers)

    def horizontal(self) -> list[int]:
        return [i for i, d in enumerate(self.layers) if d == 1]

    def bracket_basis(self, i: int, j: int) -> dict:
        """[X_i, X_j] as a sparse {k: coefficient} map."""
        if i == j:
            return {}
        if i < j:
            return self.brackets.get((i, j), {})
        return {k: -v for k, v in self.brackets.get((j, i), {}).items()}

    def structure_constant(self, i: int, j: int, k: int):
        return self.bracket_basis(i, j).get(k, ZERO)

    def bracket(self, a, b, zero=ZERO):
        """Bracket of coefficient vectors; entries may be any ring elements."""
        out = [zero] * self.dim
        for (i, j), row in self.brackets.items():
            c = a[i] * b[j] - a[j] * b[i]
            if c == 0:
                continue
            for k, v in row.items():
                out[k] = out[k] + v * c
        return out

    # -- validation -------------------------------------------------------
    def validate(self, cap: int = DEFAULT_BASIS_CAP) -> "StratifiedLieAlgebra":
        n = self.dim
        if n == 0:
            raise AlgebraValidationError("layers", "empty basis")
        if n > cap:
            raise AlgebraValidationError("cap", f"basis size {n} exceeds cap {cap}")
        if list(self.layers) != sorted(self.layers) or self.layers[0] != 1:
            raise AlgebraValidationError("layers", "basis must be sorted by layer starting at 1")
        if set(self.layers) != set(range(1, self.step + 1)):
            raise AlgebraValidationError("layers", "layers must be contiguous")
        for (i, j), row in self.brackets.items():
            if not (0 <= i < j < n) or any(not 0 <= k < n for k in row):
                raise AlgebraValidationError("antisymmetry", f"bad index in bracket ({i + 1},{j + 1})")
            for k in row:
                if self.layers[k] != self.layers[i] + self.layers[j]:
                    raise AlgebraValidationError(
                        "grading",
                        f"[X{i + 1},X{j + 1}] has a component on X{k + 1} of the wrong layer",
                    )
        for i, j, k in itertools.combinations(range(n), 3):
            total = {}
            for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                for m, v in self.bracket_basis(b, c).items():
                    for t, w in self.bracket_basis(a, m).items():
                        total[t] = total.get(t, ZERO) + v * w
            if any(v != 0 for v in total.values()):
                raise AlgebraValidationError("jacobi", f"fails on (X{i + 1}, X{j + 1}, X{k + 1})")
        for ell in range(1, self.step):
            target = [k for k in range(n) if self.layers[k] == ell + 1]
            vecs = []
            for i in self.horizontal():
                for j in (j for j in range(n) if self.layers[j] == ell):
                    br = self.bracket_basis(i, j)
                    vecs.append([br.get(k, ZERO) for k in target])
            if linalg.rank(vecs) != len(target):
                raise AlgebraValidationError(
                    "stratification", f"layer {ell + 1} is not spanned by [V1, V{ell}]"
                )
        return self

    # -- horizontal expansion ----------------------------------------------
    @cached_property
    def horizontal_expansions(self) -> list[dict]:
        """Each X_k as a noncommutative polynomial (word -> coeff) in horizontal letters."""
        n = self.dim
        exp: list[dict] = [None] * n
        for k in range(n):
            if self.layers[k] == 1:
                exp[k] = {(k,): Q(1)}
        for ell in range(1, self.step):
            target = [k for k in range(n) if self.layers[k] == ell + 1]
            pairs = [
                (i, j)
                for i in self.horizontal()
                for j in range(n)
                if self.layers[j] == ell
            ]
            cols = []
            for i, j in pairs:
                br = self.bracket_basis(i, j)
                cols.append([br.get(k, ZERO) for k in target])
            # pick an independent subset of the pairs spanning the layer
            chosen, chosen_cols = [], []
            for p, c in zip(pairs, cols):
                if linalg.rank(chosen_cols + [c]) > len(chosen_cols):
                    chosen.append(p)
                    chosen_cols.append(c)
            for pos, k in enumerate(target):
                unit = [Q(1) if t == pos else ZERO for t in range(len(target))]
                coeffs = linalg.solve(chosen_cols, unit)
                if coeffs is None:
                    raise AlgebraValidationError("stratification", f"X{k + 1} not generated")
                word_poly: dict = {}
                for (i, j), c in zip(chosen, coeffs):
                    if c == 0:
                        continue
                    for w1, a in exp[i].items():
                        for w2, b in exp[j].items():
                            for w, s in ((w1 + w2, 1), (w2 + w1, -1)):
                                word_poly[w] = word_poly.get(w, ZERO) + s * c * a * b
                exp[k] = {w: v for w, v in word_poly.items() if v != 0}
        return exp

    # -- serialization -----------------------------------------------------
    def to_json(self) -> dict:
        items = []
        for (i, j), row in sorted(self.brackets.items()):
            for k, v in sorted(row.items()):
                items.append([i + 1, j + 1, k + 1, q_str(v)])
        return {
            "schemaVersion": SCHEMA_VERSION,
            "name": self.name,
            "N": self.dim,
            "layers": list(self.layers),
            "generatorCount": self.n_generators,
            "brackets": items,
        }

    @classmethod
    def from_json(cls, data: dict, cap: int = DEFAULT_BASIS_CAP) -> "StratifiedLieAlgebra":
        try:
            layers = [int(d) for d in data["layers"]]
            raw = data.get("brackets", [])
        except (KeyError, TypeError, ValueError) as exc:
            raise AlgebraValidationError("schema", f"malformed algebra: {exc}") from exc
        brackets: dict = {}
        for entry in raw:
            try:
                i, j, k, v = entry
                i, j, k, v = int(i) - 1, int(j) - 1, int(k) - 1, to_q(v)
            except (TypeError, ValueError) as exc:
                raise AlgebraValidationError("schema", f"bad bracket entry {entry!r}") from exc
            if i == j:
                if v != 0:
                    raise AlgebraValidationError("antisymmetry", f"[X{i + 1},X{i + 1}] must vanish")
                continue
            if i > j:
                i, j, v = j, i, -v
            row = brackets.setdefault((i, j), {})
            if k in row and row[k] != v:
                raise AlgebraValidationError(
                    "antisymmetry", f"inconsistent values for [X{i + 1},X{j + 1}] on X{k + 1}"
                )
            row[k] = v
        if "N" in data and int(data["N"]) != len(layers):
            raise AlgebraValidationError("schema", "N does not match the layer list")
        alg = cls(tuple(layers), brackets, name=str(data.get("name", "custom")))
        return alg.validate(cap)

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __repr__(self):
        return f"StratifiedLieAlgebra({self.name!r}, N={self.dim}, layers={self.layer_dims})"


# -- constructions -----------------------------------------------------------

def _tensor_bracket(a: dict, b: dict) -> dict:
    out: dict = {}
    for w1, x in a.items():
        for w2, y in b.items():
            out[w1 + w2] = out.get(w1 + w2, ZERO) + x * y
            out[w2 + w1] = out.get(w2 + w1, ZERO) - x * y
    return {w: v for w, v in out.items() if v != 0}


def witt_dimension(m: int, n: int) -> int:
    """Dimension of the degree-n part of the free Lie algebra on m generators."""
    def mobius(k):
        res, p = 1, 2
        while p * p <= k:
            if k % p == 0:
                k //= p
                if k % p == 0:
                    return 0
                res = -res
            p += 1
        return -res if k > 1 else res

    return sum(mobius(d) * m ** (n // d) for d in range(1, n + 1) if n % d == 0) // n


def build_free_nilpotent(m: int, step: int, cap: int = DEFAULT_BASIS_CAP) -> StratifiedLieAlgebra:
    """Free nilpotent Lie algebra with m generators and the given step.

    Layer l+1 is filled greedily by the brackets [X_i, Y] (X_i a generator,
    Y in layer l) that are independent in the tensor algebra.  For (2, 3)
    this gives X3=[X1,X2], X4=[X1,X3], X5=[X2,X3].
    """
    if m < 1 or step < 1:
        raise ValueError("need m >= 1 and step >= 1")
    if m == 1:
        step = 1
    total = sum(witt_dimension(m, n) for n in range(1, step + 1))
    if total > cap:
        raise AlgebraValidationError("cap", f"basis size {total} exceeds cap {cap}")
    elems: list[dict] = [{(i,): Q(1)} for i in range(m)]
    layers = [1] * m
    by_layer = {1: list(range(m))}
    for ell in range(1, step):
        # words of length ell+1 over m letters index the coordinates
        coords = list(itertools.product(range(m), repeat=ell + 1))
        kept_vecs: list[list] = []
        new = []
        for i in range(m):
            for j in by_layer[ell]:
                cand = _tensor_bracket(elems[i], elems[j])
                vec = [cand.get(w, ZERO) for w in coords]
                if linalg.rank(kept_vecs + [vec]) > len(kept_vecs):
                    kept_vecs.append(vec)
                    elems.append(cand)
                    layers.append(ell + 1)
                    new.append(len(elems) - 1)
        by_layer[ell + 1] = new
    n = len(elems)
    # structure constants by expressing brackets in the layer bases
    brackets: dict = {}
    for i, j in itertools.combinations(range(n), 2):
        target_layer = layers[i] + layers[j]
        if target_layer > step:
            continue
        cand = _tensor_bracket(elems[i], elems[j])
        if not cand:
            continue
        coords = list(itertools.product(range(m), repeat=target_layer))
        basis = by_layer[target_layer]
        cols = [[elems[k].get(w, ZERO) for w in coords] for k in basis]
        coeffs = linalg.solve(cols, [cand.get(w, ZERO) for w in coords])
        row = {k: c for k, c in zip(basis, coeffs) if c != 0}
        if row:
            brackets[(i, j)] = row
    name = {(2, 2): "heisenberg-1", (2, 3): "cartan"}.get((m, step), f"free-{m}-{step}")
    return StratifiedLieAlgebra(tuple(layers), brackets, name=name).validate(cap)


def abelian(n: int) -> StratifiedLieAlgebra:
    return StratifiedLieAlgebra((1,) * n, {}, name=f"abelian-{n}").validate()


def heisenberg(n: int = 1) -> StratifiedLieAlgebra:
    """H^n: [X_i, X_{n+i}] = X_{2n+1}."""
    brackets = {(i, n + i): {2 * n: Q(1)} for i in range(n)}
    return StratifiedLieAlgebra((1,) * (2 * n) + (2,), brackets, name=f"heisenberg-{n}").validate()


def engel() -> StratifiedLieAlgebra:
    """[X1,X2]=X3, [X1,X3]=X4."""
    brackets = {(0, 1): {2: Q(1)}, (0, 2): {3: Q(1)}}
    return StratifiedLieAlgebra((1, 1, 2, 3), brackets, name="engel").validate()


def cartan() -> StratifiedLieAlgebra:
    return build_free_nilpotent(2, 3)


def preset(name: str) -> StratifiedLieAlgebra:
    """Algebras addressable by name: abelian-n, heisenberg-n, engel, cartan, free-m-k."""
    if name == "cartan":
        return cartan()
    if name == "engel":
        return engel()
    parts = name.split("-")
    try:
        if parts[0] == "abelian" and len(parts) == 2:
            return abelian(int(parts[1]))
        if parts[0] == "heisenberg" and len(parts) == 2:
            return heisenberg(int(parts[1]))
        if parts[0] == "free" and len(parts) == 3:
            return build_free_nilpotent(int(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise AlgebraValidationError("schema", f"bad preset {name!r}: {exc}") from exc
    raise AlgebraValidationError("schema", f"unknown preset {name!r}")


PRESET_NAMES = ("abelian-n", "heisenberg-n", "engel", "cartan", "free-m-k")
