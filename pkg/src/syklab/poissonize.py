"""Spectrum replacement surgery: keep the eigenbasis, Poissonize the levels.

A pool of eigenvalues is collected per parity sector from many disorder
draws.  A target Hamiltonian H = U D U^dag (per sector) is then rebuilt
as H' = U D' U^dag where D' holds dim i.i.d. draws from the sector pool,
sorted ascending so that level k of H is replaced by the rank k draw.
The difference dH = H' - H commutes with H and is small in Frobenius
norm relative to H', of order 2^{-N/4}.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ensemble import EnsembleParams, build_hamiltonian, sample_couplings
from .pauli import DenseOperator
from .spectral import SectorSpectrum, diagonalize


@dataclass(frozen=True)
class EigenvaluePool:
    """Per sector eigenvalue pools, each sorted ascending."""

    n: int
    even: np.ndarray
    odd: np.ndarray
    source_members: int

    def sector(self, tag: str) -> np.ndarray:
        if tag == "even":
            return self.even
        if tag == "odd":
            return self.odd
        raise ValueError(f"unknown sector {tag!r}")


def build_pool(
    params: EnsembleParams, members: int, start_member: int = 0, jobs: int = 1
) -> EigenvaluePool:
    """Collect sector spectra of `members` fresh disorder draws.

    Member k uses the (start_member + k)-th coupling stream, so pools
    are reproducible and extensible without re-drawing earlier members.
    """
    if members < 1:
        raise ValueError(f"need at least one member, got {members}")

    def one(k):
        h = build_hamiltonian(sample_couplings(params, member=start_member + k))
        even, odd = diagonalize(h, need_vectors=False)
        return even.eigenvalues, odd.eigenvalues

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(members)))
    else:
        results = [one(k) for k in range(members)]
    even = np.sort(np.concatenate([r[0] for r in results]))
    odd = np.sort(np.concatenate([r[1] for r in results]))
    return EigenvaluePool(params.n, even, odd, members)


@dataclass(frozen=True)
class PoissonizedPair:
    """A target Hamiltonian and its spectrum replaced twin.

    The sector eigenvector matrices in `spectra` are shared by both
    operators; `replaced` maps sector tag to the sorted replacement
    levels D'.
    """

    n: int
    original: DenseOperator
    poissonized: DenseOperator
    spectra: tuple[SectorSpectrum, SectorSpectrum]
    replaced: dict[str, np.ndarray]

    def delta(self) -> DenseOperator:
        return self.poissonized - self.original


def poissonize(
    h: DenseOperator,
    pool: EigenvaluePool,
    rng: np.random.Generator,
    replace: bool = True,
    identity_draw: bool = False,
) -> PoissonizedPair:
    """Replace the spectrum of h by sorted i.i.d. pool draws per sector.

    Parameters
    ----------
    h : ndarray
        Hermitian, parity block diagonal target.
    pool : EigenvaluePool
        Sector pools to draw from.
    rng : numpy Generator
        Consumed once per sector, even sector first.
    replace : bool
        Draw with replacement (the default ensemble definition); the
        without replacement variant needs a pool at least as large as
        the sector dimension.
    identity_draw : bool
        Test hook: skip drawing and reuse each sector's own spectrum,
        so H' must reconstruct H.

    Returns
    -------
    PoissonizedPair
    """
    spectra = diagonalize(h)
    dim = h.shape[0]
    h_prime = np.zeros((dim, dim), dtype=complex)
    replaced = {}
    for s in spectra:
        if identity_draw:
            d_prime = s.eigenvalues.copy()
        else:
            values = pool.sector(s.sector)
            if values.size == 0:
                raise ValueError(f"empty pool for sector {s.sector}")
            want = s.eigenvalues.size
            if replace:
                d_prime = values[rng.integers(0, values.size, size=want)]
            else:
                if values.size < want:
                    raise ValueError(
                        f"pool of {values.size} cannot fill {want} levels without replacement"
                    )
                d_prime = rng.choice(values, size=want, replace=False)
            d_prime = np.sort(d_prime)
        replaced[s.sector] = d_prime
        block = (s.eigenvectors * d_prime) @ s.eigenvectors.conj().T
        h_prime[np.ix_(s.basis_indices, s.basis_indices)] = block
    return PoissonizedPair(
        n=int(np.log2(dim)) * 2,
        original=h,
        poissonized=h_prime,
        spectra=spectra,
        replaced=replaced,
    )


@dataclass(frozen=True)
class DeltaDiagnostics:
    """Size and commutation checks of dH = H' - H."""

    max_level_shift: dict[str, float]
    frobenius: float
    commutator: float
    relative: float


def delta_h_diagnostics(pair: PoissonizedPair) -> DeltaDiagnostics:
    delta = pair.delta()
    shifts = {
        s.sector: float(np.max(np.abs(pair.replaced[s.sector] - s.eigenvalues)))
        for s in pair.spectra
    }
    fro = float(np.linalg.norm(delta))
    comm = float(np.linalg.norm(pair.original @ delta - delta @ pair.original))
    denom = float(np.linalg.norm(pair.poissonized))
    return DeltaDiagnostics(
        max_level_shift=shifts,
        frobenius=fro,
        commutator=comm,
        relative=fro / denom if denom > 0.0 else 0.0,
    )
