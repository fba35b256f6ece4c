"""Fast expansion of dense operators over Pauli strings and Majorana monomials.

The Pauli expansion uses the block identity

    2 [[H1, H2], [H3, H4]] = 1 (H1+H4) + sz (H1-H4) + sx (H2+H3) + i sy (H2-H3)

applied recursively on the leading tensor factor.  Implemented as one
in-place butterfly pass per spin over a rank q tensor, the cost is
O(dim^2 log dim) arithmetic instead of the 4^q trace inner products of
the brute force method.

The Pauli-to-Majorana relabeling walks spins from the last tensor
position to the first: a trailing odd count of X/Y letters means an odd
number of higher Majorana indices are present, which swaps the roles of
1 and sigma_z, and of sigma_x and sigma_y, at the current spin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import DenseOperator, PauliString, accumulate_string, hermitian_monomial

SPARSE_THRESHOLD = 1e-14

# letter codes in the coefficient tensor: 0=I, 1=X, 2=Y, 3=Z
_LETTERS = "IXYZ"

# per spin phase of the ordered Majorana product, as a power of i,
# indexed by (a, b, trailing parity) where a, b flag psi_{2s}, psi_{2s+1}
_PHASE_POW = {
    (0, 0, 0): 0, (0, 0, 1): 0,
    (1, 0, 0): 0, (1, 0, 1): 3,  # X Z = -i Y
    (0, 1, 0): 0, (0, 1, 1): 1,  # Y Z = +i X
    (1, 1, 0): 1, (1, 1, 1): 1,  # X Y = i Z, X Y Z = i
}


def _tensor_decompose(a: np.ndarray):
    """All 4^q Pauli coefficients of a dim x dim matrix, dim = 2^q.

    Returns (flat coefficient array, measured arithmetic op count).
    Flat index: base 4 digits, spin 0 most significant, 0=I 1=X 2=Y 3=Z.
    """
    a = np.asarray(a, dtype=complex)
    dim = a.shape[0]
    if a.ndim != 2 or a.shape[1] != dim or dim & (dim - 1):
        raise ValueError(f"expected a square power-of-two matrix, got shape {a.shape}")
    q = dim.bit_length() - 1
    if q == 0:
        return a.reshape(1).copy(), 0
    # interleave row and column bits: (r0, c0, r1, c1, ...) then merge pairs
    work = a.reshape((2,) * (2 * q))
    order = [x for pair in zip(range(q), range(q, 2 * q)) for x in pair]
    work = np.ascontiguousarray(work.transpose(order)).reshape((4,) * q)
    ops = 0
    shape = work.shape
    for ax in range(q):
        m = work.reshape(4**ax, 4, -1)
        a00, a01, a10, a11 = m[:, 0, :], m[:, 1, :], m[:, 2, :], m[:, 3, :]
        out = np.empty_like(m)
        out[:, 0, :] = (a00 + a11) * 0.5
        out[:, 1, :] = (a01 + a10) * 0.5
        out[:, 2, :] = (a01 - a10) * 0.5j
        out[:, 3, :] = (a00 - a11) * 0.5
        ops += 2 * work.size  # one add and one scale per output entry
        work = out.reshape(shape)
    return work.reshape(-1), ops


def measured_op_count(dim: int) -> int:
    """Arithmetic operations one decomposition of a dim x dim matrix costs."""
    return _tensor_decompose(np.zeros((dim, dim), dtype=complex))[1]


def _flat_letters(index: int, q: int) -> tuple[str, ...]:
    return tuple(_LETTERS[(index >> (2 * (q - 1 - s))) & 3] for s in range(q))


def pauli_decompose(a: DenseOperator, threshold: float = SPARSE_THRESHOLD):
    """Expand a dense operator over unit phase Pauli strings.

    Parameters
    ----------
    a : ndarray
        Square matrix of power-of-two dimension 2^q.
    threshold : float
        Coefficients with |c| <= threshold are dropped from the result.

    Returns
    -------
    dict[PauliString, complex]
        a equals sum coeff * string.dense() within roundoff.
    """
    flat, _ = _tensor_decompose(a)
    q = int(np.log2(flat.size)) // 2
    keep = np.nonzero(np.abs(flat) > threshold)[0]
    return {PauliString(_flat_letters(int(k), q)): complex(flat[k]) for k in keep}


def _digit_table(q: int) -> np.ndarray:
    """(4^q, q) array of base 4 digits, spin 0 first."""
    idx = np.arange(4**q)
    return np.stack([(idx >> (2 * (q - 1 - s))) & 3 for s in range(q)], axis=1).astype(np.int8)


def _subset_data(q: int):
    """Per flat index: Majorana subset bitmask, size, and monomial phase.

    The phase is the unit making coefficient_of(bare string) equal
    phase * coefficient_of(hermitian monomial).
    """
    digits = _digit_table(q)
    xy = (digits == 1) | (digits == 2)
    # parity of the X/Y count strictly after spin s
    trailing = np.zeros_like(digits)
    if q > 1:
        trailing[:, :-1] = np.cumsum(xy[:, :0:-1], axis=1, dtype=np.int8)[:, ::-1] & 1
    masks = np.zeros(4**q, dtype=np.int64)
    sizes = np.zeros(4**q, dtype=np.int16)
    phase_pow = np.zeros(4**q, dtype=np.int16)
    for s in range(q):
        d = digits[:, s]
        t = trailing[:, s]
        a = np.where(t == 0, (d == 1) | (d == 3), (d == 2) | (d == 0)).astype(np.int64)
        b = np.where(t == 0, (d == 2) | (d == 3), (d == 1) | (d == 0)).astype(np.int64)
        masks |= (a << (2 * s)) | (b << (2 * s + 1))
        sizes += (a + b).astype(np.int16)
        for (aa, bb, tt), pw in _PHASE_POW.items():
            if pw:
                phase_pow += (pw * ((a == aa) & (b == bb) & (t == tt))).astype(np.int16)
    # Hermitian normalization: sizes p = 2, 3 mod 4 get an extra i
    phase_pow += ((sizes * (sizes - 1) // 2) % 2 == 1).astype(np.int16)
    phases = np.array([1.0, 1.0j, -1.0, -1.0j])[phase_pow % 4]
    return masks, sizes, phases


_SUBSET_CACHE: dict[int, tuple] = {}


def subset_data(q: int):
    if q not in _SUBSET_CACHE:
        _SUBSET_CACHE[q] = _subset_data(q)
    return _SUBSET_CACHE[q]


def _mask_to_indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class FermionExpansion:
    """Real coefficients over Hermitian normalized Majorana monomials.

    A = sum over index subsets I of coefficients[I] * m_I where m_I is
    hermitian_monomial(I, n); subsets are ascending index tuples.
    """

    n: int
    coefficients: dict[tuple[int, ...], float]

    def coefficient(self, indices) -> float:
        return self.coefficients.get(tuple(indices), 0.0)

    def weight(self) -> float:
        """Sum of squared coefficients; tr(A^2)/2^{n/2} for Hermitian A."""
        c = np.fromiter(self.coefficients.values(), dtype=float, count=len(self.coefficients))
        return float(np.dot(c, c))


def majorana_coefficients(
    a: DenseOperator, n: int, threshold: float = SPARSE_THRESHOLD, imag_tol: float = 1e-10
) -> FermionExpansion:
    """Expand a Hermitian operator over Majorana monomials.

    Parameters
    ----------
    a : ndarray
        Hermitian matrix on 2^{n/2} dimensions.
    n : int
        Majorana fermion count, even.
    threshold : float
        Sparse storage cut on |coefficient|.
    imag_tol : float
        Largest tolerated imaginary part; a Hermitian input yields real
        coefficients, anything above this raises.

    Raises
    ------
    ValueError
        If the dimension does not match n or the coefficients come out
        complex (non Hermitian input).
    """
    if n % 2 != 0 or n <= 0:
        raise ValueError(f"fermion count must be positive even, got {n}")
    dim = 2 ** (n // 2)
    if a.shape != (dim, dim):
        raise ValueError(f"expected shape {(dim, dim)} for n={n}, got {a.shape}")
    flat, _ = _tensor_decompose(a)
    masks, _, phases = subset_data(n // 2)
    coeffs = flat * np.conj(phases)
    worst = float(np.max(np.abs(coeffs.imag))) if coeffs.size else 0.0
    if worst > imag_tol * max(1.0, float(np.max(np.abs(coeffs)))):
        raise ValueError(f"non Hermitian input: imaginary coefficient part {worst:.3e}")
    keep = np.nonzero(np.abs(coeffs) > threshold)[0]
    out = {_mask_to_indices(int(masks[k])): float(coeffs[k].real) for k in keep}
    return FermionExpansion(n, out)


def reconstruct(expansion: FermionExpansion) -> DenseOperator:
    """Dense operator from a Majorana expansion."""
    dim = 2 ** (expansion.n // 2)
    out = np.zeros((dim, dim), dtype=complex)
    for indices, c in expansion.coefficients.items():
        accumulate_string(out, hermitian_monomial(indices, expansion.n), c)
    return out


def size_spectrum(expansion: FermionExpansion) -> np.ndarray:
    """Squared coefficient weight per monomial size, indices 0..n."""
    out = np.zeros(expansion.n + 1)
    for indices, c in expansion.coefficients.items():
        out[len(indices)] += c * c
    return out


def size_spectrum_of_matrix(a: DenseOperator, n: int) -> np.ndarray:
    """size_spectrum straight from the dense operator, no dict detour."""
    dim = 2 ** (n // 2)
    if a.shape != (dim, dim):
        raise ValueError(f"expected shape {(dim, dim)} for n={n}, got {a.shape}")
    flat, _ = _tensor_decompose(a)
    _, sizes, _ = subset_data(n // 2)
    return np.bincount(sizes, weights=np.abs(flat) ** 2, minlength=n + 1)


def nonlocal_fraction(a: DenseOperator, n: int, k: int = 4) -> float:
    """Frobenius weight fraction carried by monomials of size > k."""
    s = size_spectrum_of_matrix(a, n)
    total = float(np.sum(s))
    if total == 0.0:
        raise ValueError("operator has zero weight")
    return float(np.sqrt(np.sum(s[k + 1 :]) / total))


def truncate_local(
    expansion: FermionExpansion, k: int = 4, original: DenseOperator | None = None
):
    """Split an expansion into dense operators of size <= k and > k.

    When the original dense operator is supplied the nonlocal part is
    formed as the exact remainder original - local, which is cheaper
    and equal to the accumulated tail up to roundoff.

    Returns
    -------
    (local, nonlocal) : pair of ndarray
    """
    if k < 0:
        raise ValueError(f"size cut must be nonnegative, got {k}")
    dim = 2 ** (expansion.n // 2)
    local = np.zeros((dim, dim), dtype=complex)
    for indices, c in expansion.coefficients.items():
        if len(indices) <= k:
            accumulate_string(local, hermitian_monomial(indices, expansion.n), c)
    if original is not None:
        if original.shape != (dim, dim):
            raise ValueError(f"original has shape {original.shape}, expected {(dim, dim)}")
        return local, original - local
    other = np.zeros((dim, dim), dtype=complex)
    for indices, c in expansion.coefficients.items():
        if len(indices) > k:
            accumulate_string(other, hermitian_monomial(indices, expansion.n), c)
    return local, other
