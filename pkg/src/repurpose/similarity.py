"""Label-set fingerprints and sparse Jaccard similarity matrices.

A fingerprint is the set of label bits a compound carries under one source
(ontology labels or precomputed structural bits).  Pairwise Jaccard
similarity over a compound index is computed via one sparse matrix product,
stored once per unordered pair with the diagonal left out, and optionally
thresholded for use as the regularization graph of the factorization
trainer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import UnknownCompoundError


@dataclass(frozen=True)
class Fingerprint:
    """Bit set of one compound under one label source."""

    compound: str
    bits: frozenset[int]


def jaccard(a, b):
    """|A n B| / |A u B| for two fingerprints; 0.0 when both are empty."""
    sa, sb = a.bits, b.bits
    if not sa and not sb:
        return 0.0
    inter = len(sa & sb)
    if inter == 0:
        return 0.0
    return inter / (len(sa) + len(sb) - inter)


def build_fingerprints(corpus, source, compound_index=None):
    """Intern one source's labels to integer bits and emit fingerprints.

    Bit ids are assigned by sorted label order, so the interning is
    deterministic for a given corpus.  Compounds without labels get an
    empty fingerprint.
    """
    if compound_index is None:
        compound_index = corpus.compound_ids()
    bit_of = {label: i for i, label in enumerate(corpus.source_labels(source))}
    fingerprints = []
    for compound in compound_index:
        labels = corpus.labels_of(compound, source)
        fingerprints.append(
            Fingerprint(compound, frozenset(bit_of[l] for l in labels)))
    return fingerprints


class SimilarityMatrix:
    """Sparse symmetric compound-compound similarity, stored upper-triangle.

    Entries are kept once per unordered pair (i < j by position in the
    compound index); queries present the symmetric view.  The diagonal is
    excluded -- the regularization penalty is identically zero there.
    """

    def __init__(self, compounds, rows, cols, values, threshold=0.0):
        self.compounds = tuple(compounds)
        self.threshold = float(threshold)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (rows < cols).all():
            raise ValueError("entries must satisfy row < col (upper triangle)")
        order = np.lexsort((cols, rows))
        self._rows = rows[order]
        self._cols = cols[order]
        self._values = values[order]
        n = len(self.compounds)
        self._keys = self._rows * n + self._cols
        self._pos = {c: i for i, c in enumerate(self.compounds)}

    @property
    def n_compounds(self):
        return len(self.compounds)

    @property
    def n_pairs(self):
        return len(self._values)

    def position(self, compound):
        try:
            return self._pos[compound]
        except KeyError:
            raise UnknownCompoundError(
                f"compound {compound!r} is not in the similarity index") from None

    def get(self, compound_a, compound_b):
        """Similarity between two compounds (symmetric; 0.0 when unstored or
        when both ids are the same, since the diagonal is not kept)."""
        i = self.position(compound_a)
        j = self.position(compound_b)
        if i == j:
            return 0.0
        if i > j:
            i, j = j, i
        key = i * len(self.compounds) + j
        at = np.searchsorted(self._keys, key)
        if at < len(self._keys) and self._keys[at] == key:
            return float(self._values[at])
        return 0.0

    def pairs(self):
        """Yield (compound_i, compound_j, value) per stored pair."""
        for i, j, v in zip(self._rows, self._cols, self._values):
            yield self.compounds[i], self.compounds[j], float(v)

    def triplets(self):
        """Raw (rows, cols, values) arrays of the stored upper triangle."""
        return self._rows, self._cols, self._values

    def to_csr(self):
        """Full symmetric scipy CSR view (both triangles, zero diagonal)."""
        n = len(self.compounds)
        rows = np.concatenate([self._rows, self._cols])
        cols = np.concatenate([self._cols, self._rows])
        data = np.concatenate([self._values, self._values])
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    def degrees(self):
        """Row sums of the symmetric view (the D diagonal of L = D - S)."""
        n = len(self.compounds)
        deg = np.zeros(n)
        np.add.at(deg, self._rows, self._values)
        np.add.at(deg, self._cols, self._values)
        return deg

    def __repr__(self):
        return (f"SimilarityMatrix({self.n_compounds} compounds, "
                f"{self.n_pairs} pairs, threshold={self.threshold})")


def build_similarity_matrix(corpus, source, compound_index=None, threshold=0.0):
    """All-pairs Jaccard similarity over `compound_index` for one source.

    Pairs with similarity >= threshold (and > 0) are stored; the comparison
    is inclusive.  Computed via a sparse bit-matrix product, so cost scales
    with shared bits rather than with all n^2 pairs.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    if compound_index is None:
        compound_index = corpus.compound_ids()
    compound_index = tuple(compound_index)
    if len(set(compound_index)) != len(compound_index):
        raise ValueError("compound_index contains duplicates")

    fingerprints = build_fingerprints(corpus, source, compound_index)
    n = len(compound_index)
    sizes = np.array([len(fp.bits) for fp in fingerprints], dtype=np.float64)

    rows, cols = [], []
    for i, fp in enumerate(fingerprints):
        rows.extend([i] * len(fp.bits))
        cols.extend(fp.bits)
    n_bits = (max(cols) + 1) if cols else 0
    bit_matrix = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n, n_bits))

    inter = sp.triu(bit_matrix @ bit_matrix.T, k=1).tocoo()
    union = sizes[inter.row] + sizes[inter.col] - inter.data
    sims = inter.data / union
    keep = sims >= threshold if threshold > 0.0 else slice(None)
    return SimilarityMatrix(
        compound_index, inter.row[keep], inter.col[keep], sims[keep], threshold)


def write_similarity_tsv(matrix, path):
    """Dump stored pairs as TSV, each pair once with ids in lexicographic
    order and rows sorted."""
    pairs = []
    for a, b, v in matrix.pairs():
        if b < a:
            a, b = b, a
        pairs.append((a, b, v))
    pairs.sort()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("compound_i\tcompound_j\tsimilarity\n")
        for a, b, v in pairs:
            fh.write(f"{a}\t{b}\t{v!r}\n")
