# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rule/penalty evaluator over flat selection masks."""

from cpython.mem cimport PyMem_Malloc, PyMem_Free


cdef int* _int_array(object values, Py_ssize_t n) except NULL:
    cdef int* out = <int*> PyMem_Malloc((n if n > 0 else 1) * sizeof(int))
    if out == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = values[i]
    return out


cdef class RuleKernel:
    """Evaluate compiled rules against a selection mask.

    The mask has one byte per element of the space (dimension-major). Rules
    are stored as flat literal arrays with ``rule_start`` offsets.
    """

    cdef int n_rules, n_lits, n_dims, n_atoms, n_rec
    cdef int* lit_atom
    cdef int* lit_neg
    cdef int* rule_start
    cdef int* rule_kind
    cdef int* dim_start
    cdef int* atom_dim
    cdef int* rec_dim
    cdef int* rec_count
    cdef int* _dim_sel

    def __cinit__(self, lit_atom, lit_neg, rule_start, rule_kind, dim_start, rec_dim, rec_count):
        self.n_rules = len(rule_kind)
        self.n_lits = len(lit_atom)
        self.n_dims = len(dim_start) - 1
        self.n_atoms = dim_start[len(dim_start) - 1]
        self.n_rec = len(rec_dim)
        self.lit_atom = _int_array(lit_atom, self.n_lits)
        self.lit_neg = _int_array(lit_neg, self.n_lits)
        self.rule_start = _int_array(rule_start, self.n_rules + 1)
        self.rule_kind = _int_array(rule_kind, self.n_rules)
        self.dim_start = _int_array(dim_start, self.n_dims + 1)
        self.rec_dim = _int_array(rec_dim, self.n_rec)
        self.rec_count = _int_array(rec_count, self.n_rec)
        self._dim_sel = _int_array([0] * self.n_dims, self.n_dims)
        atom_dim = [0] * self.n_atoms
        for d in range(self.n_dims):
            for a in range(dim_start[d], dim_start[d + 1]):
                atom_dim[a] = d
        self.atom_dim = _int_array(atom_dim, self.n_atoms)

    def __dealloc__(self):
        PyMem_Free(self.lit_atom)
        PyMem_Free(self.lit_neg)
        PyMem_Free(self.rule_start)
        PyMem_Free(self.rule_kind)
        PyMem_Free(self.dim_start)
        PyMem_Free(self.atom_dim)
        PyMem_Free(self.rec_dim)
        PyMem_Free(self.rec_count)
        PyMem_Free(self._dim_sel)

    cdef void _eval(self, const unsigned char* mask, bint partial, int* out) noexcept nogil:
        cdef int r, l, a, d, k, c, dev
        cdef bint fired
        cdef int* sel = self._dim_sel
        out[0] = 0
        out[1] = 0
        out[2] = 0
        out[3] = 0
        for d in range(self.n_dims):
            c = 0
            for a in range(self.dim_start[d], self.dim_start[d + 1]):
                c += mask[a] != 0
            sel[d] = c
        for r in range(self.n_rules):
            fired = True
            for l in range(self.rule_start[r], self.rule_start[r + 1]):
                a = self.lit_atom[l]
                if partial and sel[self.atom_dim[a]] == 0:
                    fired = False
                    break
                if (mask[a] != 0) == (self.lit_neg[l] != 0):
                    fired = False
                    break
            if fired:
                out[self.rule_kind[r]] += 1
        for k in range(self.n_rec):
            c = sel[self.rec_dim[k]]
            if partial and c == 0:
                continue
            dev = c - self.rec_count[k]
            out[3] += dev if dev >= 0 else -dev

    def evaluate(self, const unsigned char[::1] mask, bint partial=False):
        """Return ``(v_hard, v_pos, v_neg, r_q)`` for one mask."""
        cdef int out[4]
        if mask.shape[0] != self.n_atoms:
            raise ValueError("mask length does not match the space")
        self._eval(&mask[0], partial, out)
        return out[0], out[1], out[2], out[3]

    def evaluate_batch(self, const unsigned char[::1] masks, bint partial=False):
        """Evaluate a concatenation of masks; returns a list of 4-tuples."""
        cdef int out[4]
        cdef Py_ssize_t i, n
        if self.n_atoms == 0 or masks.shape[0] % self.n_atoms:
            raise ValueError("batch length is not a multiple of the mask length")
        n = masks.shape[0] // self.n_atoms
        result = []
        for i in range(n):
            self._eval(&masks[i * self.n_atoms], partial, out)
            result.append((out[0], out[1], out[2], out[3]))
        return result
