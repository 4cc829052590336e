"""PCA of the output-layer rows, projection pairs, cluster detection, factor inference."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class PcaResult:
    components: np.ndarray          # (n_components, n_features), orthonormal rows
    explained_variance: np.ndarray  # nonincreasing
    projections: np.ndarray         # (n_rows, n_components), row q is class q
    mean: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


@dataclass(frozen=True)
class ProjectionPair:
    pair_index: int
    points: np.ndarray   # (P, 2): column 0 is PC 2m, column 1 is PC 2m+1
    labels: np.ndarray

    @property
    def components(self) -> tuple[int, int]:
        return 2 * self.pair_index, 2 * self.pair_index + 1


@dataclass(frozen=True)
class FactorizationResult:
    k: int
    m: int
    pair_index: int | None
    residue_modulus: int | None

    def __post_init__(self):
        # holds on every construction, not just in tests
        if not 1 < self.k < self.k * self.m or self.m < 2:
            raise ValueError(f"trivial factorization {self.k} x {self.m}")

    @property
    def modulus(self) -> int:
        return self.k * self.m

    def to_dict(self) -> dict:
        return asdict(self)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude coordinate is positive."""
    idx = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(len(vectors)), idx])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def pca(rows) -> PcaResult:
    """Covariance PCA (centered, unscaled) of a P x N matrix.

    Eigen-decomposes whichever of the N x N covariance or P x P Gram matrix is
    smaller. Up to ``min(P, N)`` components are returned; directions with zero
    variance complete the orthonormal set.
    """
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a matrix with at least two rows")
    n_rows, n_feat = x.shape
    mean = x.mean(axis=0)
    xc = x - mean
    denom = n_rows - 1
    n_comp = min(n_rows, n_feat)

    if n_feat <= n_rows:
        evals, evecs = np.linalg.eigh(xc.T @ xc / denom)
        order = np.argsort(evals, kind="stable")[::-1]
        variances = np.clip(evals[order], 0.0, None)
        directions = evecs[:, order].T
    else:
        evals, evecs = np.linalg.eigh(xc @ xc.T / denom)
        order = np.argsort(evals, kind="stable")[::-1]
        evals = np.clip(evals[order], 0.0, None)
        scale = evals.max(initial=0.0)
        keep = evals > scale * n_rows * 1e-13
        u = evecs[:, order][:, keep]
        directions = (xc.T @ u) / np.sqrt(evals[keep] * denom)
        if directions.shape[1] < n_comp:
            # complete the basis in the null space of the data
            basis, _ = np.linalg.qr(np.hstack([directions, np.eye(n_feat)]))
            directions = np.hstack([directions, basis[:, directions.shape[1]:n_comp]])
        directions = directions.T
        variances = np.concatenate([evals[keep], np.zeros(n_comp - int(keep.sum()))])

    directions = _fix_signs(directions[:n_comp])
    return PcaResult(directions, variances[:n_comp], xc @ directions.T, mean)


def projection_pairs(result: PcaResult, count: int) -> list[ProjectionPair]:
    if count < 0 or 2 * count > result.n_components:
        raise ValueError(f"{count} pairs need {2 * count} components; "
                         f"only {result.n_components} available")
    labels = np.arange(result.projections.shape[0])
    return [ProjectionPair(m, result.projections[:, 2 * m:2 * m + 2].copy(), labels)
            for m in range(count)]


def circularity_score(points) -> float:
    """1 - (spread of radii / mean radius) about the centroid, clamped to [0, 1]."""
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) < 3:
        raise ValueError("need at least three points")
    radii = np.linalg.norm(pts - pts.mean(axis=0), axis=1)
    mean_r = radii.mean()
    if not mean_r > 0:
        raise ValueError("degenerate point set: all points coincide")
    return float(np.clip(1.0 - radii.std() / mean_r, 0.0, 1.0))


def _distances(pts):
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def cluster_points(points, link_factor: float = 2.0) -> list[list[int]]:
    """Single-linkage clusters cut at ``link_factor`` x median nearest-neighbour distance.

    Merging every pair closer than the cut equals single-linkage agglomeration
    stopped at that height, so this is a union-find over the qualifying edges.
    Clusters are lists of point indices, ordered by their smallest member.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if n < 2:
        raise ValueError("need at least two points")
    dist = _distances(pts)
    np.fill_diagonal(dist, np.inf)
    cut = link_factor * float(np.median(dist.min(axis=1)))

    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in zip(*np.nonzero(np.triu(dist <= cut, k=1))):
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    groups: dict[int, list[int]] = {}
    for a in range(n):
        groups.setdefault(find(a), []).append(a)
    return sorted(groups.values(), key=lambda g: g[0])


def _residue_modulus(clusters, p):
    for d in sorted((d for d in range(2, p + 1) if p % d == 0), reverse=True):
        if all(len({label % d for label in c}) == 1 for c in clusters):
            return d
    return None


def infer_factorization(clusters, p: int, pair_index: int | None = None) -> FactorizationResult | None:
    """``(k, m)`` when the labels split into k equal clusters of m with 1 < k < P."""
    labels = sorted(label for c in clusters for label in c)
    if labels != list(range(p)):
        raise ValueError("clusters must partition the labels 0..P-1")
    sizes = {len(c) for c in clusters}
    k = len(clusters)
    if len(sizes) != 1 or not 1 < k < p:
        return None
    m = sizes.pop()
    if k * m != p:
        return None
    return FactorizationResult(k, m, pair_index, _residue_modulus(clusters, p))


@dataclass(frozen=True)
class PairScan:
    pair_index: int
    circularity: float
    cluster_sizes: list[int]
    clusters: list[list[int]]
    factorization: FactorizationResult | None

    def to_dict(self) -> dict:
        return {
            "pair_index": self.pair_index,
            "components": [2 * self.pair_index, 2 * self.pair_index + 1],
            "circularity": self.circularity,
            "cluster_count": len(self.clusters),
            "cluster_sizes": self.cluster_sizes,
            "clusters": self.clusters,
            "factorization": None if self.factorization is None else self.factorization.to_dict(),
        }


def scan_pairs(result: PcaResult, p: int, pair_count: int, link_factor: float = 2.0) -> list[PairScan]:
    scans = []
    for pair in projection_pairs(result, pair_count):
        clusters = cluster_points(pair.points, link_factor)
        clusters = [[int(pair.labels[i]) for i in c] for c in clusters]
        try:
            circ = circularity_score(pair.points)
        except ValueError:
            circ = 0.0
        scans.append(PairScan(pair.pair_index, circ, [len(c) for c in clusters], clusters,
                              infer_factorization(clusters, p, pair.pair_index)))
    return scans


def scan_factorization(result: PcaResult, p: int, pair_count: int = 3,
                       link_factor: float = 2.0) -> FactorizationResult | None:
    """Best factorization over the first ``pair_count`` projection pairs.

    Among pairs whose clusters factor P, the most circular one wins; ties go
    to the lower pair index.
    """
    best = None
    for scan in scan_pairs(result, p, pair_count, link_factor):
        if scan.factorization is None:
            continue
        if best is None or scan.circularity > best.circularity:
            best = scan
    return None if best is None else best.factorization


def inject_clusters(p: int, k: int, width: int = 16, pair: int = 0, seed: int = 0) -> np.ndarray:
    """Synthetic P x width output matrix whose rows form k equal clusters by residue mod k.

    Cluster centres sit evenly on a circle in the plane of projection pair
    ``pair``; members are spread evenly on a small ring around their centre.
    Earlier pairs get large-variance noise so the circle lands where asked.
    """
    if p % k:
        raise ValueError(f"{k} does not divide {p}")
    if width < 2 * pair + 2:
        raise ValueError("width too small for the requested pair")
    rng = np.random.default_rng(seed)
    m = p // k
    q = np.arange(p)
    centre = 2.0 * math.pi * (q % k) / k
    member = 2.0 * math.pi * (q // k) / m
    rows = 1e-3 * rng.standard_normal((p, width))
    lead = 2 * pair
    rows[:, lead] += 10.0 * np.cos(centre) + 0.3 * np.cos(member)
    rows[:, lead + 1] += 10.0 * np.sin(centre) + 0.3 * np.sin(member)
    if lead:
        # centred, mutually orthogonal and orthogonal to the circle plane
        basis = np.hstack([rows[:, lead:lead + 2], rng.standard_normal((p, lead))])
        basis -= basis.mean(axis=0)
        q_mat, _ = np.linalg.qr(basis)
        scales = 60.0 - 2.0 * np.arange(lead)
        rows[:, :lead] = q_mat[:, 2:] * scales * math.sqrt(p)
    return rows
