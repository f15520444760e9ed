"""Binary-symplectic stabilizer tableau with destabilizers (CHP-style)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PauliOp:
    """Hermitian Pauli product ``sign * prod_j P_j``; ``(x, z) = (1, 1)`` is Y."""

    x: np.ndarray
    z: np.ndarray
    sign: int = 1

    @classmethod
    def identity(cls, n: int) -> "PauliOp":
        return cls(np.zeros(n, dtype=bool), np.zeros(n, dtype=bool))

    @classmethod
    def from_support(cls, n: int, xs=(), zs=(), sign: int = 1) -> "PauliOp":
        p = cls.identity(n)
        p.x[list(xs)] = True
        p.z[list(zs)] = True
        p.sign = sign
        return p

    @property
    def n(self) -> int:
        return len(self.x)

    def commutes(self, other: "PauliOp") -> bool:
        return not (np.count_nonzero(self.x & other.z) + np.count_nonzero(self.z & other.x)) % 2

    def __mul__(self, other: "PauliOp") -> "PauliOp":
        exp = 2 * (self.sign < 0) + 2 * (other.sign < 0) + int(_g(self.x, self.z, other.x, other.z).sum())
        exp %= 4
        if exp % 2:
            raise ValueError("product of anticommuting Paulis is not Hermitian")
        return PauliOp(self.x ^ other.x, self.z ^ other.z, -1 if exp == 2 else 1)

    def __eq__(self, other):
        return (
            isinstance(other, PauliOp)
            and self.sign == other.sign
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __repr__(self):
        chars = "".join("IZXY"[2 * a + b] for a, b in zip(self.x, self.z))
        return f"PauliOp({'+' if self.sign > 0 else '-'}{chars})"


def _g(x1, z1, x2, z2):
    """Power of i picked up when multiplying single-qubit Paulis P1 * P2, elementwise."""
    x1 = np.asarray(x1, dtype=np.int8)
    z1 = np.asarray(z1, dtype=np.int8)
    x2 = np.asarray(x2, dtype=np.int8)
    z2 = np.asarray(z2, dtype=np.int8)
    return np.where(
        (x1 == 0) & (z1 == 0),
        0,
        np.where(
            (x1 == 1) & (z1 == 1),
            z2 - x2,
            np.where(x1 == 1, z2 * (2 * x2 - 1), x2 * (1 - 2 * z2)),
        ),
    )


class Tableau:
    """Stabilizer state on ``n`` qubits.

    Rows ``0..n-1`` are destabilizers, rows ``n..2n-1`` stabilizers; ``r`` holds
    sign bits (1 means a minus sign).
    """

    def __init__(self, x: np.ndarray, z: np.ndarray, r: np.ndarray):
        self.n = x.shape[1]
        self.x = x.astype(bool)
        self.z = z.astype(bool)
        self.r = r.astype(bool)

    @classmethod
    def zero_state(cls, n: int) -> "Tableau":
        x = np.zeros((2 * n, n), dtype=bool)
        z = np.zeros((2 * n, n), dtype=bool)
        x[np.arange(n), np.arange(n)] = True
        z[n + np.arange(n), np.arange(n)] = True
        return cls(x, z, np.zeros(2 * n, dtype=bool))

    @classmethod
    def graph_state(cls, n: int, edges) -> "Tableau":
        """Stabilizers ``X_u prod_{v ~ u} Z_v`` with destabilizers ``Z_u``."""
        x = np.zeros((2 * n, n), dtype=bool)
        z = np.zeros((2 * n, n), dtype=bool)
        z[np.arange(n), np.arange(n)] = True
        x[n + np.arange(n), np.arange(n)] = True
        for a, b in edges:
            z[n + a, b] = True
            z[n + b, a] = True
        return cls(x, z, np.zeros(2 * n, dtype=bool))

    def copy(self) -> "Tableau":
        return Tableau(self.x.copy(), self.z.copy(), self.r.copy())

    def stabilizer(self, i: int) -> PauliOp:
        row = self.n + i
        return PauliOp(self.x[row].copy(), self.z[row].copy(), -1 if self.r[row] else 1)

    def stabilizers(self) -> list[PauliOp]:
        return [self.stabilizer(i) for i in range(self.n)]

    # -- gates -------------------------------------------------------------

    def h(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def apply_pauli(self, p: PauliOp) -> None:
        """Conjugate the state by ``p``: flips signs of anticommuting rows."""
        anti = ((self.x & p.z).sum(axis=1) + (self.z & p.x).sum(axis=1)) % 2 == 1
        self.r ^= anti

    def apply_z(self, a: int) -> None:
        self.r ^= self.x[:, a]

    # -- row arithmetic ----------------------------------------------------

    def _rowsum(self, targets: np.ndarray, i: int) -> None:
        """Rows ``targets`` <- row_i * row_target (vectorised over targets)."""
        if len(targets) == 0:
            return
        g = _g(self.x[i], self.z[i], self.x[targets], self.z[targets]).sum(axis=1)
        total = 2 * self.r[targets].astype(np.int64) + 2 * int(self.r[i]) + g
        self.r[targets] = total % 4 == 2
        self.x[targets] ^= self.x[i]
        self.z[targets] ^= self.z[i]

    def _product_sign(self, rows) -> tuple[np.ndarray, np.ndarray, bool]:
        x = np.zeros(self.n, dtype=bool)
        z = np.zeros(self.n, dtype=bool)
        exp = 0
        for i in rows:
            exp += 2 * int(self.r[i]) + int(_g(self.x[i], self.z[i], x, z).sum())
            x ^= self.x[i]
            z ^= self.z[i]
        return x, z, exp % 4 == 2

    # -- measurement -------------------------------------------------------

    def measure_z(self, a: int, rng: np.random.Generator | None = None, outcome: int | None = None) -> tuple[int, bool]:
        """Measure ``Z_a``.  Returns ``(+1/-1, was_random)``.

        A forced ``outcome`` is used for random measurements and must agree for
        deterministic ones.
        """
        n = self.n
        hits = np.flatnonzero(self.x[n:, a])
        if len(hits):
            p = n + hits[0]
            others = np.flatnonzero(self.x[:, a])
            others = others[others != p]
            self._rowsum(others, p)
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.r[p - n] = self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, a] = True
            if outcome is None:
                if rng is None:
                    raise ValueError("random measurement needs an rng or a forced outcome")
                bit = bool(rng.integers(2))
            else:
                bit = outcome < 0
            self.r[p] = bit
            return (-1 if bit else 1), True
        rows = n + np.flatnonzero(self.x[:n, a])
        _, _, minus = self._product_sign(rows)
        value = -1 if minus else 1
        if outcome is not None and outcome != value:
            raise ValueError(f"forced outcome {outcome} contradicts deterministic value {value}")
        return value, False

    def measure_x(self, a: int, rng: np.random.Generator | None = None, outcome: int | None = None) -> tuple[int, bool]:
        self.h(a)
        try:
            return self.measure_z(a, rng, outcome)
        finally:
            self.h(a)

    # -- queries -----------------------------------------------------------

    def expectation(self, p: PauliOp) -> int:
        """``<P>`` for a Pauli: ``+1``/``-1`` if ``+-P`` is a stabilizer, else 0."""
        n = self.n
        stab_anti = ((self.x[n:] & p.z).sum(axis=1) + (self.z[n:] & p.x).sum(axis=1)) % 2
        if stab_anti.any():
            return 0
        destab_anti = ((self.x[:n] & p.z).sum(axis=1) + (self.z[:n] & p.x).sum(axis=1)) % 2
        x, z, minus = self._product_sign(n + np.flatnonzero(destab_anti))
        if not (np.array_equal(x, p.x) and np.array_equal(z, p.z)):
            raise AssertionError("tableau is inconsistent: commuting Pauli not in the group")
        sign = -1 if minus else 1
        return sign * p.sign

    def check_valid(self) -> None:
        """Symplectic form must be the standard one: destab_i anticommutes only with stab_i."""
        x, z = self.x.astype(np.int64), self.z.astype(np.int64)
        form = (x @ z.T + z @ x.T) % 2
        n = self.n
        want = np.zeros((2 * n, 2 * n), dtype=np.int64)
        want[np.arange(n), n + np.arange(n)] = 1
        want[n + np.arange(n), np.arange(n)] = 1
        if not np.array_equal(form, want):
            raise AssertionError("tableau rows violate the symplectic structure")

    def restricted(self, keep) -> list[PauliOp]:
        """Generators of the subgroup supported on ``keep``.

        Valid once every other qubit has been measured, so that each of them is
        stabilised by a single-qubit Pauli.
        """
        keep = np.asarray(sorted(keep))
        drop = np.setdiff1d(np.arange(self.n), keep)
        n = self.n
        # local stabiliser on each measured qubit
        local: dict[int, PauliOp] = {}
        for a in drop:
            for kind in ("z", "x"):
                p = PauliOp.from_support(n, xs=[a] if kind == "x" else [], zs=[a] if kind == "z" else [])
                val = self.expectation(p)
                if val:
                    p.sign = val
                    local[int(a)] = p
                    break
            else:
                raise ValueError(f"qubit {a} is not in a Z or X eigenstate")
        gens: list[PauliOp] = []
        for s in self.stabilizers():
            for a in drop:
                if s.x[a] or s.z[a]:
                    s = s * local[int(a)]
            if s.x[drop].any() or s.z[drop].any():
                raise AssertionError("could not clear measured support")
            if s.x.any() or s.z.any():
                gens.append(PauliOp(s.x[keep].copy(), s.z[keep].copy(), s.sign))
        return _independent(gens)


def gf2_rank(rows: np.ndarray) -> int:
    m = np.array(rows, dtype=bool)
    rank = 0
    for col in range(m.shape[1]):
        piv = np.flatnonzero(m[rank:, col])
        if not len(piv):
            continue
        p = rank + piv[0]
        m[[rank, p]] = m[[p, rank]]
        others = np.flatnonzero(m[:, col])
        others = others[others != rank]
        m[others] ^= m[rank]
        rank += 1
        if rank == m.shape[0]:
            break
    return rank


def _independent(gens: list[PauliOp]) -> list[PauliOp]:
    out: list[PauliOp] = []
    rows = np.zeros((0, 2 * gens[0].n if gens else 0), dtype=bool)
    for g in gens:
        cand = np.vstack([rows, np.concatenate([g.x, g.z])[None]])
        if gf2_rank(cand) > len(out):
            out.append(g)
            rows = cand
    return out
