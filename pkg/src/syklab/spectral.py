"""Sector resolved diagonalization and spectral statistics.

Gap ratios are always computed within one parity sector; mixing sectors
before taking ratios fakes Poisson statistics even for random matrix
spectra (and for N = 2 mod 4 the two sector spectra coincide exactly, so
a combined spectrum is doubly degenerate).  Pooling happens only at the
statistics and histogram layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, log

import numpy as np

from .errors import NumericalError
from .pauli import DenseOperator, require_hermitian, sector_split

DEGENERACY_THRESHOLD = 1e-14  # relative to spectrum bandwidth

# mean of min(r, 1/r): exact Poisson value and the random matrix value
# reproduced by the Monte Carlo oracle below (large GUE matrices)
POISSON_MIN_RATIO = 2.0 * log(2.0) - 1.0
GUE_MIN_RATIO = 0.5996


@dataclass(frozen=True)
class SectorSpectrum:
    """Eigendata of one parity sector.

    eigenvalues ascend; eigenvectors hold one normalized column per
    eigenvalue, expressed in the sector's own basis; basis_indices map
    sector rows back to full space basis states.
    """

    sector: str
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    basis_indices: np.ndarray


def diagonalize(h: DenseOperator, need_vectors: bool = True, residual_tol: float = 1e-10):
    """Diagonalize a parity conserving Hermitian operator per sector.

    Parameters
    ----------
    h : ndarray
        Hermitian, parity block diagonal matrix.
    need_vectors : bool
        Skip eigenvector output (cheaper) when False.
    residual_tol : float
        Bound on ||U w U^dag - H_sector||_F relative to ||H_sector||_F.

    Returns
    -------
    (even, odd) : tuple of SectorSpectrum

    Raises
    ------
    StructureError
        If h is not Hermitian or not block diagonal.
    NumericalError
        If the eigensolver residual exceeds residual_tol.
    """
    require_hermitian(h, what="hamiltonian")
    ee, oo, (even_idx, odd_idx) = sector_split(h)
    out = []
    for tag, block, idx in (("even", ee, even_idx), ("odd", oo, odd_idx)):
        if need_vectors:
            w, u = np.linalg.eigh(block)
            scale = max(float(np.linalg.norm(block)), 1e-300)
            residual = float(np.linalg.norm((u * w) @ u.conj().T - block))
            if residual > residual_tol * scale:
                raise NumericalError(
                    f"eigensolver residual {residual:.3e} exceeds {residual_tol:g} "
                    f"of sector norm {scale:.3e}"
                )
        else:
            w, u = np.linalg.eigvalsh(block), None
        out.append(SectorSpectrum(tag, w, u, idx))
    return tuple(out)


def combined_eigenvalues(spectra) -> np.ndarray:
    """Ascending union of the sector spectra."""
    return np.sort(np.concatenate([s.eigenvalues for s in spectra]))


@dataclass(frozen=True)
class GapRatioSample:
    """Consecutive gap ratios of one spectrum.

    ratios[i] = g_{i+1} / g_i over the kept gaps; degenerate_count says
    how many gaps fell below the degeneracy threshold and were omitted
    together with the ratios touching them.
    """

    ratios: np.ndarray
    degenerate_count: int


def gap_ratios(eigenvalues: np.ndarray, threshold: float = DEGENERACY_THRESHOLD) -> GapRatioSample:
    """Gap ratios r_i = (e_{i+2}-e_{i+1})/(e_{i+1}-e_i) of one sector.

    The input must already be a single sector's spectrum; pass sectors
    separately and pool the results.
    """
    e = np.sort(np.asarray(eigenvalues, dtype=float))
    if e.size < 3:
        return GapRatioSample(np.empty(0), 0)
    gaps = np.diff(e)
    bandwidth = float(e[-1] - e[0])
    bad = gaps <= threshold * bandwidth
    keep = ~(bad[1:] | bad[:-1])
    ratios = gaps[1:][keep] / gaps[:-1][keep]
    return GapRatioSample(ratios, int(np.count_nonzero(bad)))


def min_ratio_statistic(ratios: np.ndarray) -> float:
    """Mean of min(r, 1/r), the unfolding free chaos indicator."""
    r = np.asarray(ratios, dtype=float)
    if r.size == 0:
        raise ValueError("no ratios to average")
    return float(np.mean(np.minimum(r, 1.0 / r)))


@dataclass(frozen=True)
class ReferenceStatistic:
    kind: str
    mean: float
    stderr: float
    count: int


def reference_ratio_statistic(
    kind: str,
    rng: np.random.Generator | None = None,
    poisson_levels: int = 1_000_000,
    gue_size: int = 64,
    gue_samples: int = 400,
) -> ReferenceStatistic:
    """Monte Carlo reference for the mean min gap ratio.

    kind="poisson" draws one long i.i.d. level sequence; kind="gue"
    pools full spectrum ratios of many complex Hermitian Gaussian
    matrices.  Returns mean, standard error and the ratio count.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if kind == "poisson":
        levels = rng.random(poisson_levels)
        vals = np.minimum(*_ratio_pair(levels))
    elif kind == "gue":
        pools = []
        for _ in range(gue_samples):
            a = rng.normal(size=(gue_size, gue_size)) + 1j * rng.normal(size=(gue_size, gue_size))
            w = np.linalg.eigvalsh((a + a.conj().T) / 2.0)
            pools.append(np.minimum(*_ratio_pair(w)))
        vals = np.concatenate(pools)
    else:
        raise ValueError(f"unknown reference kind {kind!r}")
    return ReferenceStatistic(
        kind, float(np.mean(vals)), float(np.std(vals) / np.sqrt(vals.size)), int(vals.size)
    )


def _ratio_pair(levels):
    g = np.diff(np.sort(levels))
    r = g[1:] / g[:-1]
    return r, 1.0 / r


def sff(eigenvalues: np.ndarray, beta: float, times: np.ndarray) -> np.ndarray:
    """Exact spectral form factor |Z(beta + it)|^2 of one spectrum.

    Parameters
    ----------
    eigenvalues : ndarray
        The levels entering Z; pass the combined spectrum for the full
        system or one sector for a nondegenerate spectrum.
    beta : float
    times : ndarray

    Returns
    -------
    ndarray of float, same shape as times.
    """
    e = np.asarray(eigenvalues, dtype=float)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty(t.size)
    weights = np.exp(-beta * e)
    chunk = max(1, (1 << 22) // max(e.size, 1))
    for k in range(0, t.size, chunk):
        phases = np.exp(-1j * np.outer(e, t[k : k + chunk]))
        z = weights @ phases
        out[k : k + chunk] = np.abs(z) ** 2
    return out.reshape(np.shape(times))


def sff_long_time_average(eigenvalues: np.ndarray, beta: float, t1: float, t2: float) -> float:
    """Exact mean of the SFF over [t1, t2] via closed form integration.

    For a nondegenerate spectrum and t2 >> t1 >> 1/(min gap) this
    converges to Z(2 beta).
    """
    if not t2 > t1:
        raise ValueError("need t2 > t1")
    e = np.asarray(eigenvalues, dtype=float)
    w = np.exp(-beta * e)
    omega = e[:, None] - e[None, :]
    span = t2 - t1
    kernel = np.ones_like(omega)
    nz = omega != 0.0
    kernel[nz] = ((np.exp(1j * omega[nz] * t2) - np.exp(1j * omega[nz] * t1)) / (1j * omega[nz] * span)).real
    return float(w @ kernel @ w)


@dataclass(frozen=True)
class MeanDensity:
    """Normalized histogram model of the mean spectral density.

    density integrates to one over the edges; point evaluation uses
    linear interpolation between bin centers, while transforms integrate
    the piecewise constant histogram in closed form.
    """

    edges: np.ndarray
    density: np.ndarray

    @classmethod
    def from_samples(cls, values: np.ndarray, bins: int = 64) -> "MeanDensity":
        density, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, density=True)
        return cls(edges, density)

    @property
    def norm(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))

    def require_normalized(self, tol: float = 1e-8):
        if abs(self.norm - 1.0) > tol:
            raise ValueError(f"density integrates to {self.norm:.6f}, not 1")

    def density_at(self, e) -> np.ndarray:
        centers = (self.edges[:-1] + self.edges[1:]) / 2.0
        return np.interp(np.asarray(e, dtype=float), centers, self.density, left=0.0, right=0.0)

    def transform(self, w) -> np.ndarray:
        """integral rho(E) exp(-w E) dE for complex w, exact per bin."""
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        lo, hi = self.edges[:-1], self.edges[1:]
        out = np.empty(w.shape, dtype=complex)
        small = np.abs(w) * (self.edges[-1] - self.edges[0]) < 1e-12
        if np.any(small):
            out[small] = np.sum(self.density * (hi - lo))
        big = ~small
        if np.any(big):
            wb = w[big][:, None]
            segments = (np.exp(-wb * lo[None, :]) - np.exp(-wb * hi[None, :])) / wb
            out[big] = segments @ self.density
        return out


def sff_poisson_average(
    density: MeanDensity, beta: float, times: np.ndarray, levels: int
) -> np.ndarray:
    """Ensemble averaged SFF of levels i.i.d. from the mean density.

    Disconnected part |Zbar(beta - it)|^2 from the transform of the
    density plus the constant plateau Zbar(2 beta).

    Raises
    ------
    ValueError
        If the density is not normalized (checked to 1e-8).
    """
    density.require_normalized()
    t = np.asarray(times, dtype=float)
    zbar = levels * density.transform(beta - 1j * t)
    plateau = levels * float(density.transform(2.0 * beta).real[0])
    return (np.abs(zbar) ** 2 + plateau).reshape(np.shape(times))


@dataclass(frozen=True)
class MomentTerm:
    """One partition term of a Poisson ensemble density moment.

    Indices sharing a block are constrained to equal energy (the delta
    factors); the weight is the exact index counting fraction.
    """

    blocks: tuple[tuple[int, ...], ...]
    weight: Fraction

    @property
    def weight_float(self) -> float:
        return float(self.weight)


def set_partitions(items: tuple):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + ((first,) + part[k],) + part[k + 1 :]
        yield ((first,),) + part


def poisson_moment(n: int, n_levels: int) -> list[MomentTerm]:
    """Partition expansion of the n point density moment, n <= 4.

    For levels i.i.d. from rho-bar, the ensemble average of
    rho(E_1)...rho(E_n) splits over set partitions; a partition with r
    blocks carries weight N(N-1)...(N-r+1)/N^n and one rho-bar factor
    per block with delta constraints inside each block.
    """
    if not 1 <= n <= 4:
        raise ValueError(f"moment order must be in 1..4, got {n}")
    if n_levels < 1:
        raise ValueError(f"need a positive level count, got {n_levels}")
    terms = []
    for part in set_partitions(tuple(range(n))):
        blocks = tuple(tuple(sorted(b)) for b in part)
        blocks = tuple(sorted(blocks))
        r = len(blocks)
        falling = Fraction(1)
        for k in range(r):
            falling *= n_levels - k
        terms.append(MomentTerm(blocks, falling / Fraction(n_levels) ** n))
    return sorted(terms, key=lambda t: (len(t.blocks), t.blocks))


def count_moment(n: int, n_levels: int, p: float) -> float:
    """E[(number of levels in a region of mass p)^n] under the ensemble.

    Each partition with r blocks contributes weight * N^n * p^r, i.e.
    the falling factorial N(N-1)...(N-r+1) times p^r.
    """
    return sum(
        t.weight_float * float(n_levels) ** n * p ** len(t.blocks)
        for t in poisson_moment(n, n_levels)
    )
