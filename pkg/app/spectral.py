"""
Eigensystems of transition matrices.

Right eigenvectors are columns u^b, left eigenvectors are rows v^b, scaled
so that v^b u^c = delta_bc. Eigenvalues are ordered by decreasing modulus.
Clusters of (nearly) equal eigenvalues are grouped into real invariant
subspaces; a complex conjugate pair becomes one real 2-d group.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eig, eigvals, orth, svdvals
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from core.chain import ReducedChain, StochasticMatrix
from core.errors import EigenFailure, ZetaOutOfRange


class GroupKind(str, Enum):
    REAL_SIMPLE = "real-simple"
    REAL_DEGENERATE = "real-degenerate"
    COMPLEX_PAIR = "complex-pair"


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Full eigendecomposition of P with biorthonormal left/right vectors."""

    n: int
    eigenvalues: np.ndarray          # (N,) complex
    right_vectors: np.ndarray        # (N, N) complex, column b is u^b
    left_vectors: np.ndarray         # (N, N) complex, row b is v^b
    diagonalizable: bool
    condition_estimate: float

    def reconstruct(self) -> np.ndarray:
        """sum_b lambda^b u^b v^b."""
        return (self.right_vectors * self.eigenvalues) @ self.left_vectors

    def reconstruction_error(self, P: StochasticMatrix) -> float:
        return float(np.abs(self.reconstruct() - P.entries).max())

    def biorthonormality_error(self) -> float:
        gram = self.left_vectors @ self.right_vectors
        return float(np.abs(gram - np.eye(self.n)).max())


@dataclass(frozen=True, eq=False)
class EigenspaceGroup:
    """
    A real invariant subspace for one (possibly repeated) eigenvalue, or for a
    complex conjugate pair folded together.
    """

    eigenvalue: complex
    dimension: int
    basis: np.ndarray                # (N, d) real
    kind: GroupKind
    indices: Tuple[int, ...]         # 0-based positions in the EigenSystem
    vectors: np.ndarray              # (N, k) complex eigenvectors spanning the group
    left_basis: Optional[np.ndarray] = field(default=None)  # (d, N) real, dual to basis

    def block(self) -> np.ndarray:
        """The d x d matrix B with P basis = basis B."""
        lam = self.eigenvalue
        if self.kind is not GroupKind.COMPLEX_PAIR:
            return lam.real * np.eye(self.dimension)
        k = self.dimension // 2
        a, b = lam.real, lam.imag
        block = np.zeros((self.dimension, self.dimension))
        block[:k, :k] = a * np.eye(k)
        block[k:, k:] = a * np.eye(k)
        block[:k, k:] = b * np.eye(k)
        block[k:, :k] = -b * np.eye(k)
        return block

    def invariance_residual(self, P: StochasticMatrix) -> float:
        return float(np.abs(P.entries @ self.basis - self.basis @ self.block()).max())


def normalize_columns(vectors: np.ndarray) -> np.ndarray:
    """
    Scale each column to unit max-norm with its first nonzero element real and
    positive.
    """
    vectors = np.array(vectors, dtype=complex if np.iscomplexobj(vectors) else float)
    for b in range(vectors.shape[1]):
        column = vectors[:, b]
        peak = np.abs(column).max()
        if peak == 0:
            continue
        first = column[np.flatnonzero(np.abs(column) > 1e-8 * peak)[0]]
        column = column * (np.conj(first) / abs(first))
        vectors[:, b] = column / np.abs(column).max()
    return vectors


def _ordering(values: np.ndarray) -> np.ndarray:
    rounded = np.round(values, 12)
    return np.lexsort((-rounded.imag, -rounded.real, -np.abs(rounded)))


def eigensystem(P: StochasticMatrix, spectral_tol: float = 1e-10, logger=None) -> EigenSystem:
    """
    Compute the eigensystem of P.

    Left vectors are the rows of the inverse of the right-vector matrix, which
    makes biorthonormality hold by construction (including inside degenerate
    eigenspaces, where independently computed left vectors would not pair up).

    Args:
        P: transition matrix
        spectral_tol: the matrix counts as diagonalizable while the condition
            number of the right-vector matrix stays below 1 / spectral_tol and
            no eigenvalue cluster has dependent eigenvectors
        logger: optional RunLogger

    Raises:
        EigenFailure: when LAPACK does not converge
    """
    try:
        values, right = eig(P.entries, left=False, right=True)
    except (LinAlgError, ValueError) as e:
        raise EigenFailure(f"eigensolver failed: {e}")

    order = _ordering(values)
    values = values[order].astype(complex)
    right = normalize_columns(right[:, order].astype(complex))

    condition = float(np.linalg.cond(right))
    defective = defective_clusters(values, right, spectral_tol)
    diagonalizable = bool(np.isfinite(condition) and condition * spectral_tol < 1.0 and not defective)
    if diagonalizable:
        left = np.linalg.inv(right)
    else:
        left = np.linalg.pinv(right)

    es = EigenSystem(
        n=P.n,
        eigenvalues=values,
        right_vectors=right,
        left_vectors=left,
        diagonalizable=diagonalizable,
        condition_estimate=condition,
    )

    if logger:
        logger.log_info(
            f"Eigensystem N={P.n}: cond={condition:.3e}, diagonalizable={diagonalizable}"
        )
        for cluster in defective:
            logger.log_warning(
                f"Dependent eigenvectors for eigenvalue {complex(np.mean(values[cluster])):.6g} "
                f"(multiplicity {len(cluster)})"
            )
        if diagonalizable:
            error = es.reconstruction_error(P)
            if error > spectral_tol * max(1.0, condition):
                logger.log_warning(f"Eigen-reconstruction error {error:.3e} above tolerance")
    return es


def is_rank_deficient(es: EigenSystem, tol: float) -> bool:
    return bool(np.abs(es.eigenvalues).min() <= tol)


def _linkage_clusters(values: np.ndarray, tol: float) -> List[List[int]]:
    """Single-linkage clusters of eigenvalue indices within tol in the complex plane."""
    if len(values) == 1:
        return [[0]]
    points = np.column_stack([values.real, values.imag])
    adjacency = squareform(pdist(points)) <= tol
    count, labels = connected_components(adjacency, directed=False)
    clusters = [np.flatnonzero(labels == c).tolist() for c in range(count)]
    return sorted(clusters, key=lambda c: c[0])


def _snap_real(values: np.ndarray, tol: float) -> np.ndarray:
    """Drop imaginary parts within tol, so a split real pair clusters as one."""
    return np.where(np.abs(values.imag) <= tol, values.real + 0j, values)


def defective_clusters(values: np.ndarray, right: np.ndarray, spectral_tol: float) -> List[List[int]]:
    """
    Clusters of nearby eigenvalues whose eigenvectors are numerically dependent.

    A Jordan block splits under rounding into eigenvalues about sqrt(eps)
    apart with almost parallel eigenvectors, which a global condition number
    alone does not catch. Eigenvalues within spectral_tol**(1/3) are compared;
    the cluster is defective when the smallest singular value of its
    unit-norm eigenvector block is at most sqrt(spectral_tol).
    """
    floor = np.sqrt(spectral_tol)
    defective = []
    for cluster in _linkage_clusters(values, spectral_tol ** (1.0 / 3.0)):
        if len(cluster) < 2:
            continue
        block = right[:, cluster]
        block = block / np.linalg.norm(block, axis=0)
        if svdvals(block).min() <= floor:
            defective.append(cluster)
    return defective


def _real_basis(vectors: np.ndarray, dimension: int, tol: float) -> np.ndarray:
    if np.abs(vectors.imag).max() <= tol:
        return normalize_columns(vectors.real)
    # a numerically real cluster returned with complex vectors
    span = orth(np.hstack([vectors.real, vectors.imag]))
    return normalize_columns(span[:, :dimension])


def group_eigenvalues(es: EigenSystem, group_tol: float = 1e-8, logger=None) -> List[EigenspaceGroup]:
    """
    Merge eigenvalues closer than group_tol into eigenspace groups.

    Imaginary parts within group_tol are dropped before clustering, so a real
    eigenvalue that LAPACK returns as a split conjugate pair forms one cluster.
    Real clusters keep their (normalized) eigenvectors as basis. A cluster in
    the upper half plane is merged with its conjugate cluster into one group
    whose basis is [Re U, Im U].

    Returns:
        groups in the eigenvalue order of es, each with a dual left basis
    """
    values = es.eigenvalues
    clusters = _linkage_clusters(_snap_real(values, group_tol), group_tol)
    used = set()
    drafts = []

    for cluster in clusters:
        if cluster[0] in used:
            continue
        used.update(cluster)
        centre = complex(np.mean(values[cluster]))
        vectors = es.right_vectors[:, cluster]

        if abs(centre.imag) <= group_tol:
            d = len(cluster)
            kind = GroupKind.REAL_SIMPLE if d == 1 else GroupKind.REAL_DEGENERATE
            basis = _real_basis(vectors, d, group_tol)
            drafts.append((complex(centre.real, 0.0), d, basis, kind, tuple(cluster), vectors))
            continue

        partner = next(
            (
                other for other in clusters
                if other[0] not in used
                and abs(complex(np.mean(values[other])) - centre.conjugate()) <= group_tol
            ),
            None,
        )
        indices = list(cluster)
        if partner is not None:
            used.update(partner)
            indices += partner
        upper = cluster if centre.imag > 0 or partner is None else partner
        vectors = es.right_vectors[:, upper]
        if complex(np.mean(values[upper])).imag < 0:
            vectors = vectors.conj()
        if centre.imag < 0:
            centre = centre.conjugate()
        basis = np.hstack([vectors.real, vectors.imag])
        drafts.append((centre, basis.shape[1], basis, GroupKind.COMPLEX_PAIR,
                       tuple(sorted(indices)), vectors))

    full = np.hstack([draft[2] for draft in drafts])
    try:
        dual = np.linalg.inv(full)
    except np.linalg.LinAlgError:
        dual = np.linalg.pinv(full)

    groups = []
    offset = 0
    for centre, d, basis, kind, indices, vectors in drafts:
        groups.append(EigenspaceGroup(
            eigenvalue=centre,
            dimension=d,
            basis=basis,
            kind=kind,
            indices=indices,
            vectors=vectors,
            left_basis=dual[offset:offset + d],
        ))
        offset += d

    if logger:
        degenerate = sum(1 for g in groups if g.kind is GroupKind.REAL_DEGENERATE)
        pairs = sum(1 for g in groups if g.kind is GroupKind.COMPLEX_PAIR)
        logger.log_info(
            f"Grouped {es.n} eigenvalues into {len(groups)} groups "
            f"({degenerate} degenerate, {pairs} complex pairs)"
        )
    return groups


def perturb(P: StochasticMatrix, zeta: float) -> StochasticMatrix:
    """
    (1 - zeta) P + zeta I: same lumpings as P, eigenvalues moved by
    lambda -> (1 - zeta) lambda + zeta, eigenvectors unchanged.

    Raises:
        ZetaOutOfRange: unless 0 <= zeta < 1
    """
    if not 0.0 <= zeta < 1.0:
        raise ZetaOutOfRange(zeta)
    return StochasticMatrix((1.0 - zeta) * P.entries + zeta * np.eye(P.n))


def spectrum_subset_check(P: StochasticMatrix, reduced: ReducedChain, tol: float = 1e-7) -> bool:
    """True iff every eigenvalue of P~ lies within tol of an eigenvalue of P."""
    try:
        full = eigvals(P.entries)
        part = eigvals(np.asarray(reduced.matrix))
    except (LinAlgError, ValueError) as e:
        raise EigenFailure(f"eigensolver failed: {e}")
    return all(np.abs(full - mu).min() <= tol for mu in part)


def stationary_distribution(es: EigenSystem) -> np.ndarray:
    """Left eigenvector of eigenvalue 1, made nonnegative and l1-normalized."""
    index = int(np.argmin(np.abs(es.eigenvalues - 1.0)))
    nu = np.abs(es.left_vectors[index].real)
    return nu / nu.sum()
