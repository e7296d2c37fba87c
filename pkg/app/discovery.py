"""
Spectral discovery of strong lumpings.

Every eigenspace group induces a partition (states whose basis rows agree).
Those partitions, plus probes obtained by forcing rows equal inside
degenerate groups, are closed under meet. A candidate Q survives when the
eigenvectors constant on Q span at least |Q| dimensions, and is reported
only after the exact row-sum check on the original matrix. For degenerate
spectra the verified lumpings are also closed under join.
"""

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eig, lstsq, null_space, svd
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from app.oracle import bell_number
from app.spectral import (
    EigenspaceGroup,
    GroupKind,
    eigensystem,
    group_eigenvalues,
    is_rank_deficient,
    normalize_columns,
    perturb,
)
from core import config as defaults
from core.chain import (
    Partition,
    StochasticMatrix,
    is_lumpable,
    partition_join,
    partition_meet,
    reduce,
)
from core.errors import (
    CandidateOverflow,
    ConfigError,
    EigenFailure,
    NotDiagonalizable,
)


@dataclass(frozen=True)
class DiscoveryConfig:
    """Tolerances and caps for spectral discovery."""

    element_tol: float = defaults.DEFAULT_TOL_ELEMENT
    group_tol: float = defaults.DEFAULT_TOL_GROUP
    spectral_tol: float = defaults.DEFAULT_TOL_EIG
    zeta: float = defaults.DEFAULT_ZETA
    max_rotation_patterns: int = defaults.DEFAULT_MAX_ROTATION_PATTERNS
    max_candidates: int = defaults.DEFAULT_MAX_CANDIDATES
    # largest N for breadth-first probing; above it only single merges are tried
    exhaustive_subset_limit: int = defaults.DEFAULT_EXHAUSTIVE_SUBSET_LIMIT

    def __post_init__(self):
        for name in ("element_tol", "group_tol", "spectral_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("max_rotation_patterns", "max_candidates", "exhaustive_subset_limit"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)!r}")


@dataclass(frozen=True, eq=False)
class Generator:
    """The part of one eigenspace group that is constant on a candidate's lumps."""

    group_index: int
    eigenvalue: complex
    kind: GroupKind
    indices: Tuple[int, ...]                 # eigenvector positions (0-based)
    coefficients: np.ndarray                 # (d, r) in the group basis
    complement_coefficients: np.ndarray      # (d, d - r), dual directions left out
    vectors: np.ndarray                      # (N, r) real generating vectors

    @property
    def rank(self) -> int:
        return self.coefficients.shape[1]

    @property
    def rotated(self) -> bool:
        return 0 < self.rank < self.coefficients.shape[0]


@dataclass(frozen=True, eq=False)
class LumpingCandidate:
    partition: Partition
    generating_set: Tuple[Generator, ...] = ()
    complement: Tuple[int, ...] = ()         # eigenvector positions of unused groups
    verified: bool = False
    max_deviation: float = float("nan")

    @property
    def count(self) -> int:
        return sum(g.rank for g in self.generating_set)


@dataclass
class DiscoveryResult:
    candidates: List[LumpingCandidate]
    eigensystem: object
    groups: List[EigenspaceGroup]
    zeta_applied: Optional[float] = None
    overflow: bool = False
    rotation_capped: bool = False
    complete: bool = False
    examined: int = 0
    warnings: List[str] = field(default_factory=list)

    @property
    def partitions(self) -> List[Partition]:
        return [c.partition for c in self.candidates]


class WitnessVector(NamedTuple):
    eigenvalue: complex
    vector: np.ndarray
    residual: float


# --- element equality -----------------------------------------------------

def _partition_from_rows(rows: np.ndarray, element_tol: float) -> Partition:
    """Single-linkage classes of rows within element_tol in the max-norm."""
    n = rows.shape[0]
    if n == 1:
        return Partition((0,))
    distances = squareform(pdist(rows, metric="chebyshev"))
    _, labels = connected_components(distances <= element_tol, directed=False)
    return Partition.from_labels(labels)


def _as_real_rows(vectors: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(vectors):
        return np.hstack([vectors.real, vectors.imag])
    return vectors


def induced_partition(group: EigenspaceGroup, element_tol: float = 1e-7) -> Partition:
    """States i ~ j iff rows i and j of the group basis agree within element_tol."""
    return _partition_from_rows(group.basis, element_tol)


def _spread(vectors: np.ndarray, target: Partition) -> float:
    spread = 0.0
    for block in target.blocks:
        if len(block) > 1:
            spread = max(spread, float(np.ptp(vectors[list(block)], axis=0).max()))
    return spread


def _constraints(rows: np.ndarray, target: Partition) -> np.ndarray:
    differences = [
        rows[i] - rows[block[0]]
        for block in target.blocks
        for i in block[1:]
    ]
    if not differences:
        return np.zeros((0, rows.shape[1]), dtype=rows.dtype)
    return np.vstack(differences)


def _null_space(matrix: np.ndarray, tol: float) -> np.ndarray:
    width = matrix.shape[1]
    if matrix.shape[0] == 0:
        return np.eye(width, dtype=matrix.dtype)
    _, singular, vh = svd(matrix)
    rank = int(np.sum(singular > tol))
    return vh[rank:].conj().T


def _rotation_rank(group: EigenspaceGroup) -> int:
    return group.vectors.shape[1] if group.kind is GroupKind.COMPLEX_PAIR else group.dimension


def rotation_search(group: EigenspaceGroup, target: Partition, element_tol: float = 1e-7) -> Optional[np.ndarray]:
    """
    Vectors in the span of a group that are constant on every lump of target.

    Solves (row_i - row_j) w = 0 for all i, j sharing a lump. For complex
    pairs the system is solved over the complex eigenvectors so that only
    genuine invariant subspaces are returned (real and imaginary parts).

    Returns:
        (N, r) real matrix with unit max-norm columns, or None when r = 0
    """
    if group.kind is GroupKind.COMPLEX_PAIR:
        coefficients = _null_space(_constraints(group.vectors, target), element_tol)
        if coefficients.shape[1] == 0:
            return None
        combined = group.vectors @ coefficients
        return normalize_columns(np.hstack([combined.real, combined.imag]))

    coefficients = _null_space(_constraints(group.basis, target), element_tol)
    if coefficients.shape[1] == 0:
        return None
    return normalize_columns(group.basis @ coefficients)


def _constant_part(group: EigenspaceGroup, target: Partition, element_tol: float) -> Optional[np.ndarray]:
    if group.dimension == 1:
        return group.basis if _spread(group.basis, target) <= element_tol else None
    return rotation_search(group, target, element_tol)


def _generator(index: int, group: EigenspaceGroup, vectors: np.ndarray) -> Generator:
    coefficients = lstsq(group.basis, vectors)[0]
    complement = null_space(coefficients.T)
    return Generator(
        group_index=index,
        eigenvalue=group.eigenvalue,
        kind=group.kind,
        indices=group.indices,
        coefficients=coefficients,
        complement_coefficients=complement,
        vectors=vectors,
    )


# --- candidate lattice ----------------------------------------------------

def _probe(group: EigenspaceGroup, cfg: DiscoveryConfig, exhaustive: bool) -> Tuple[Set[Partition], bool]:
    """
    Partitions reachable by forcing pairs of lumps equal inside a degenerate
    group. Breadth-first from the group's own induced partition; beyond the
    exhaustive limit only single merges of that partition are probed.
    """
    start = induced_partition(group, cfg.element_tol)
    found: Set[Partition] = set()
    seen = {start}
    queue = deque([start])
    patterns = 0

    while queue:
        current = queue.popleft()
        blocks = current.blocks
        for a in range(len(blocks)):
            for b in range(a + 1, len(blocks)):
                if patterns >= cfg.max_rotation_patterns:
                    return found, True
                patterns += 1
                labels = list(current.assignment)
                for state in blocks[b]:
                    labels[state] = a
                vectors = rotation_search(group, Partition.from_labels(labels), cfg.element_tol)
                if vectors is None:
                    continue
                probe = _partition_from_rows(_as_real_rows(vectors), cfg.element_tol)
                found.add(probe)
                if exhaustive and vectors.shape[1] >= 2 and probe not in seen:
                    seen.add(probe)
                    queue.append(probe)
    return found, False


def _meet_closure(seeds: Sequence[Partition], limit: int, n: int) -> Tuple[List[Partition], bool]:
    """All meets of nonempty seed subsets, stopping at limit or at B_n."""
    everything = bell_number(n)
    lattice: Set[Partition] = set()
    for seed in sorted(set(seeds), key=Partition.sort_key):
        additions = {seed} | {partition_meet(seed, other) for other in lattice}
        lattice |= additions
        if len(lattice) > limit:
            return sorted(lattice, key=Partition.sort_key)[:limit], True
        if len(lattice) == everything:
            break
    return sorted(lattice, key=Partition.sort_key), False


def _candidate(part: Partition, groups: List[EigenspaceGroup], cfg: DiscoveryConfig) -> Optional[LumpingCandidate]:
    """The candidate for part, or None when its eigenvectors fail the count condition."""
    generating = []
    complement = []
    for index, group in enumerate(groups):
        vectors = _constant_part(group, part, cfg.element_tol)
        if vectors is None:
            complement.extend(group.indices)
        else:
            generating.append(_generator(index, group, vectors))
    if sum(g.rank for g in generating) < part.m:
        return None
    return LumpingCandidate(
        partition=part,
        generating_set=tuple(generating),
        complement=tuple(sorted(complement)),
    )


def _candidates(groups: List[EigenspaceGroup], cfg: DiscoveryConfig, logger=None):
    n = groups[0].basis.shape[0]
    exhaustive = n <= cfg.exhaustive_subset_limit
    seeds = {Partition.single_lump(n)}
    capped = False

    for index, group in enumerate(groups):
        seeds.add(induced_partition(group, cfg.element_tol))
        if _rotation_rank(group) >= 2:
            probes, hit_cap = _probe(group, cfg, exhaustive)
            seeds |= probes
            capped = capped or hit_cap
            if hit_cap and logger:
                logger.log_warning(f"Rotation pattern cap reached in group {index}")

    lattice, overflow = _meet_closure(list(seeds), cfg.max_candidates, n)
    if logger:
        logger.log_info(f"Candidate lattice: {len(seeds)} seeds, {len(lattice)} partitions")

    candidates = [c for c in (_candidate(part, groups, cfg) for part in lattice) if c is not None]
    return candidates, overflow, capped


def _join_closure(lumpings: Sequence[Partition], limit: int) -> List[Partition]:
    """
    Joins of lumpings that are not lumpings already in the list. The join of
    two strong lumpings is again a strong lumping, so every returned
    partition only needs the row-sum check. At most limit pairs are joined.
    """
    known = set(lumpings)
    pending = sorted(known, key=Partition.sort_key)
    added = []
    pairs = 0
    while pending:
        current = pending.pop(0)
        for other in sorted(known, key=Partition.sort_key):
            if current.refines(other) or other.refines(current):
                continue
            pairs += 1
            if pairs > limit:
                return added
            joined = partition_join(current, other)
            if joined not in known:
                known.add(joined)
                added.append(joined)
                pending.append(joined)
    return added


def generate_candidates(groups: List[EigenspaceGroup], cfg: DiscoveryConfig, logger=None) -> List[LumpingCandidate]:
    """
    Unverified candidates passing the eigenvector count condition.

    Raises:
        CandidateOverflow: lattice closure exceeded cfg.max_candidates; the
            candidates built from the truncated lattice ride on the exception
    """
    candidates, overflow, _ = _candidates(groups, cfg, logger)
    if overflow:
        raise CandidateOverflow(cfg.max_candidates, candidates)
    return candidates


def _verify(P: StochasticMatrix, candidates: List[LumpingCandidate], lump_tol: float, workers: int):
    def check(candidate):
        return candidate, is_lumpable(P, candidate.partition, lump_tol)

    if workers > 0:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(check, candidates))
    else:
        verdicts = [check(c) for c in candidates]

    return [
        LumpingCandidate(
            partition=candidate.partition,
            generating_set=candidate.generating_set,
            complement=candidate.complement,
            verified=True,
            max_deviation=verdict.max_deviation,
        )
        for candidate, verdict in verdicts
        if verdict.lumpable
    ]


def run_discovery(
    P: StochasticMatrix,
    cfg: DiscoveryConfig = DiscoveryConfig(),
    lump_tol: float = defaults.DEFAULT_TOL_LUMP,
    workers: int = 0,
    logger=None,
    strict: bool = False,
) -> DiscoveryResult:
    """
    eigensystem -> group_eigenvalues -> candidates -> row-sum verification.

    Rank-deficient matrices are perturbed with cfg.zeta first; verification
    always runs on the original P.

    Raises:
        NotDiagonalizable, EigenFailure
        CandidateOverflow: only when strict; otherwise the overflow is a warning
    """
    warnings = []
    zeta_applied = None
    es = eigensystem(P, cfg.spectral_tol, logger=logger)
    if is_rank_deficient(es, cfg.group_tol):
        zeta_applied = cfg.zeta
        warnings.append(f"perturbation applied: matrix is rank deficient, zeta={cfg.zeta!r}")
        if logger:
            logger.log_warning(f"Rank-deficient input, perturbing with zeta={cfg.zeta}")
        es = eigensystem(perturb(P, cfg.zeta), cfg.spectral_tol, logger=logger)

    if not es.diagonalizable:
        raise NotDiagonalizable(es.condition_estimate)

    groups = group_eigenvalues(es, cfg.group_tol, logger=logger)
    candidates, overflow, capped = _candidates(groups, cfg, logger)
    if overflow:
        if strict:
            raise CandidateOverflow(cfg.max_candidates, candidates)
        warnings.append(
            f"candidate overflow: lattice truncated at max_candidates={cfg.max_candidates}"
        )

    degenerate = [g for g in groups if _rotation_rank(g) >= 2]
    if degenerate:
        warnings.append(
            f"degenerate spectrum: {len(degenerate)} eigenspace(s) of dimension >= 2; "
            f"completeness not guaranteed"
        )
    if capped:
        warnings.append(
            f"rotation pattern cap reached (max_rotation_patterns={cfg.max_rotation_patterns})"
        )

    verified = _verify(P, candidates, lump_tol, workers)
    if degenerate and not overflow:
        joins = _join_closure([c.partition for c in verified], cfg.max_candidates)
        extra = [c for c in (_candidate(part, groups, cfg) for part in joins) if c is not None]
        verified += _verify(P, extra, lump_tol, workers)
        candidates += extra
        if extra and logger:
            logger.log_info(f"Join closure added {len(extra)} candidates")
    verified.sort(key=lambda c: c.partition.sort_key())
    if logger:
        logger.log_info(f"Discovery: {len(candidates)} candidates, {len(verified)} verified lumpings")

    return DiscoveryResult(
        candidates=verified,
        eigensystem=es,
        groups=groups,
        zeta_applied=zeta_applied,
        overflow=overflow,
        rotation_capped=capped,
        complete=not (overflow or degenerate),
        examined=len(candidates),
        warnings=warnings,
    )


def discover(
    P: StochasticMatrix,
    cfg: DiscoveryConfig = DiscoveryConfig(),
    lump_tol: float = defaults.DEFAULT_TOL_LUMP,
    workers: int = 0,
    logger=None,
) -> List[LumpingCandidate]:
    """Verified lumpings, ordered by lump count then canonical assignment."""
    return run_discovery(P, cfg, lump_tol, workers, logger).candidates


def annihilated_left_vectors(candidate: LumpingCandidate, groups: List[EigenspaceGroup]) -> np.ndarray:
    """
    Left vectors dual to everything outside the generating set: whole groups
    that contribute nothing, plus the complementary directions of groups that
    contribute only a rotated part.
    """
    used = {g.group_index: g for g in candidate.generating_set}
    rows = []
    for index, group in enumerate(groups):
        generator = used.get(index)
        if generator is None:
            rows.append(group.left_basis)
        elif generator.complement_coefficients.shape[1]:
            rows.append(generator.complement_coefficients.T @ group.left_basis)
    if not rows:
        return np.zeros((0, groups[0].basis.shape[0]))
    return np.vstack(rows)


def converse_witness(P: StochasticMatrix, part: Partition, tol: float = 1e-9) -> List[WitnessVector]:
    """
    Lift the eigenvectors of the quotient chain back to P: y_i = y~_k for i in L_k.

    Raises:
        NotLumpable
    """
    reduced = reduce(P, part, tol)
    try:
        values, vectors = eig(reduced.matrix)
    except (LinAlgError, ValueError) as e:
        raise EigenFailure(f"eigensolver failed: {e}")

    pi = part.membership_matrix()
    lifted = normalize_columns(pi @ vectors)
    witnesses = []
    for b in range(part.m):
        y = lifted[:, b]
        residual = float(np.abs(P.entries @ y - values[b] * y).max())
        witnesses.append(WitnessVector(complex(values[b]), y, residual))
    return witnesses
