"""Pure-Python twin of the compiled rule kernel (same API and results)."""

from __future__ import annotations

from typing import Sequence


class RuleKernel:
    def __init__(
        self,
        lit_atom: Sequence[int],
        lit_neg: Sequence[int],
        rule_start: Sequence[int],
        rule_kind: Sequence[int],
        dim_start: Sequence[int],
        rec_dim: Sequence[int],
        rec_count: Sequence[int],
    ):
        self.n_atoms = dim_start[-1]
        self.rules = []
        for r, kind in enumerate(rule_kind):
            lits = tuple(
                (lit_atom[i], bool(lit_neg[i])) for i in range(rule_start[r], rule_start[r + 1])
            )
            self.rules.append((kind, lits))
        self.dims = [(dim_start[d], dim_start[d + 1]) for d in range(len(dim_start) - 1)]
        self.atom_dim = [0] * self.n_atoms
        for d, (lo, hi) in enumerate(self.dims):
            for a in range(lo, hi):
                self.atom_dim[a] = d
        self.rec = list(zip(rec_dim, rec_count))

    def _eval(self, mask, offset: int, partial: bool) -> tuple[int, int, int, int]:
        sel = [sum(1 for a in range(lo, hi) if mask[offset + a]) for lo, hi in self.dims]
        out = [0, 0, 0]
        atom_dim = self.atom_dim
        for kind, lits in self.rules:
            for a, neg in lits:
                if partial and not sel[atom_dim[a]]:
                    break
                if bool(mask[offset + a]) == neg:
                    break
            else:
                out[kind] += 1
        r_q = 0
        for d, n in self.rec:
            if partial and not sel[d]:
                continue
            r_q += abs(sel[d] - n)
        return out[0], out[1], out[2], r_q

    def evaluate(self, mask, partial: bool = False) -> tuple[int, int, int, int]:
        if len(mask) != self.n_atoms:
            raise ValueError("mask length does not match the space")
        return self._eval(mask, 0, partial)

    def evaluate_batch(self, masks, partial: bool = False) -> list[tuple[int, int, int, int]]:
        if self.n_atoms == 0 or len(masks) % self.n_atoms:
            raise ValueError("batch length is not a multiple of the mask length")
        return [
            self._eval(masks, i, partial) for i in range(0, len(masks), self.n_atoms)
        ]
