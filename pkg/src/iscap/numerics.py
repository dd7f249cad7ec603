"""Dense complex-matrix kernels and deterministic random sampling.

Everything here operates on small (<= ~100 x 100) dense complex Hermitian
matrices and is written to be bit-reproducible: identical inputs give
identical outputs regardless of thread count or call order.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotPositiveDefinite

HERMITIAN_RTOL = 1e-10


def _as_complex_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got ndim={m.ndim}")
    return m


def herm(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def check_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate Hermitian symmetry of ``a`` and return its symmetrized copy.

    Raises:
        DimensionMismatch: if ``a`` is not square.
        NotHermitian: if ``||a - a^H||_F > rtol * ||a||_F``.
    """
    a = _as_complex_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix is {a.shape[0]}x{a.shape[1]}, not square")
    nrm = np.linalg.norm(a)
    asym = np.linalg.norm(a - herm(a))
    if asym > rtol * nrm:
        raise NotHermitian(f"asymmetry {asym:.3e} exceeds {rtol:.1e} * ||A||_F = {rtol * nrm:.3e}")
    return 0.5 * (a + herm(a))


@dataclass
class EigDecomposition:
    """Hermitian eigendecomposition A = V diag(w) V^H.

    eigenvalues are real and ascending; eigenvector columns are unit norm,
    mutually orthonormal, and phase-fixed so that the largest-magnitude
    entry of each column is real and nonnegative.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ herm(v)


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real >= 0."""
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    mags = np.abs(pivots)
    # unit-norm columns always have a nonzero pivot
    phases = np.where(mags > 0, pivots / np.where(mags > 0, mags, 1.0), 1.0)
    return vectors * phases.conj()


def hermitian_eig(a) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Raises:
        NotHermitian: symmetry tolerance violated.
        DimensionMismatch: non-square input.
    """
    a = check_hermitian(a)
    w, v = np.linalg.eigh(a)
    return EigDecomposition(eigenvalues=w, eigenvectors=_fix_phases(v))


def project_psd_stack(stack: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD projection applied over the leading axis.

    ``stack`` has shape (..., n, n); inputs are symmetrized before the
    eigenvalue clip, so callers may pass nearly-Hermitian iterates.
    """
    sym = 0.5 * (stack + np.conj(np.swapaxes(stack, -2, -1)))
    w, v = np.linalg.eigh(sym)
    w = np.maximum(w, 0.0)
    return (v * w[..., None, :]) @ np.conj(np.swapaxes(v, -2, -1))


def project_psd(a) -> np.ndarray:
    """Project a Hermitian matrix onto the PSD cone (Frobenius-nearest point).

    Raises:
        NotHermitian, DimensionMismatch
    """
    a = check_hermitian(a)
    return project_psd_stack(a)


def principal_generalized_eigvec(a, b) -> np.ndarray:
    """Unit vector u maximizing the generalized Rayleigh quotient u^H A u / u^H B u.

    Computed by the symmetric reduction C = L^{-1} A L^{-H} with B = L L^H
    rather than by forming B^{-1} A, which keeps the reduced problem Hermitian.

    Args:
        a: Hermitian matrix.
        b: Hermitian positive definite matrix of the same size.

    Returns:
        Column vector (n, 1), unit norm, phase-fixed.

    Raises:
        NotPositiveDefinite: if ``b`` fails Cholesky factorization.
    """
    a = check_hermitian(a)
    b = check_hermitian(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"A is {a.shape}, B is {b.shape}")
    try:
        ell = np.linalg.cholesky(b)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    # C = L^{-1} A L^{-H}
    tmp = np.linalg.solve(ell, a)
    c = np.linalg.solve(ell, herm(tmp)).conj().T
    c = 0.5 * (c + herm(c))
    _, vecs = np.linalg.eigh(c)
    u = np.linalg.solve(herm(ell), vecs[:, -1])
    u = u / np.linalg.norm(u)
    return _fix_phases(u[:, None])


def generalized_rayleigh(u: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Evaluate (u^H A u) / (u^H B u) for a column vector u."""
    u = np.asarray(u).reshape(-1)
    num = np.vdot(u, a @ u).real
    den = np.vdot(u, b @ u).real
    return num / den


def _hash_stream_id(*tags) -> int:
    """Stable 64-bit stream id from arbitrary (str | int) tags."""
    h = hashlib.blake2b(digest_size=8)
    for tag in tags:
        if isinstance(tag, (int, np.integer)):
            h.update(b"i")
            h.update(int(tag).to_bytes(16, "little", signed=True))
        else:
            raw = str(tag).encode("utf-8")
            h.update(b"s")
            h.update(len(raw).to_bytes(4, "little"))
            h.update(raw)
    return int.from_bytes(h.digest(), "little")


@dataclass
class SeededRng:
    """Deterministic, platform-independent random stream.

    The (master_seed, stream_id) pair fully determines the sample sequence;
    streams derived for different purposes never collide in practice because
    the id is a 64-bit hash of the purpose tags. Instances are stateful
    sample sources and must not be shared between threads.
    """

    master_seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(default=None, repr=False, compare=False)

    def generator(self) -> np.random.Generator:
        if self._gen is None:
            key = np.array([self.master_seed % 2**64, self.stream_id % 2**64], dtype=np.uint64)
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen

    def derive(self, *tags) -> "SeededRng":
        """Child stream for (purpose) tags; independent of sampling order."""
        return SeededRng(self.master_seed, _hash_stream_id(self.stream_id, *tags))


def derive_stream(master_seed: int, *tags) -> SeededRng:
    """Stream for e.g. (experiment, drop, purpose), hash-derived so that
    parallel execution order cannot change any sequence."""
    return SeededRng(master_seed, _hash_stream_id(*tags))


def sample_complex_gaussian(rng: SeededRng, rows: int, cols: int = 1) -> np.ndarray:
    """(rows x cols) matrix of i.i.d. CN(0, 1) entries.

    Real and imaginary parts are independent N(0, 1/2), giving unit variance
    per complex entry.
    """
    if rows < 1 or cols < 1:
        raise DimensionMismatch(f"invalid shape ({rows}, {cols})")
    g = rng.generator()
    re = g.standard_normal((rows, cols))
    im = g.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2.0)
