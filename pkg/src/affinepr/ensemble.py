"""Measurement ensembles and noiseless affine-phaseless observations.

Two sampling models are provided:

* Gaussian: every entry of the ``m x n`` matrix ``A`` is ``u + iv`` with
  ``u, v ~ N(0, 1/2)`` independent.
* Coded diffraction patterns (CDP): ``L`` diagonal modulations followed by an
  unnormalized DFT.  Row ``j = l*n + k`` (0-based) is ``a_(l,k)^* = f_k^* D_l^*``
  with ``f_k^* = (w^0, w^-k, ..., w^-(n-1)k)``, ``w = exp(2 pi i / n)``.  In the
  1-based indexing ``l = ceil(j/n)`` this is the same ordering.

Row ``j`` of :attr:`MeasurementEnsemble.rows` stores ``a_j^*`` so the forward
map is simply ``A @ x + b``.
"""
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ._validation import (
    check_complex_matrix,
    check_complex_vector,
    check_offsets,
    check_positive_int,
    check_seed,
)
from .exceptions import InvalidArgumentError

GAUSSIAN = "gaussian"
CDP = "cdp"
CUSTOM = "custom"
MODELS = (GAUSSIAN, CDP, CUSTOM)

DEFAULT_B = 52.0

_MASK64 = (1 << 64) - 1

# (b1, b2) factors of the octanary law: b1 uniform on {1, -1, i, -i},
# b2 = sqrt(2)/2 w.p. 4/5 and sqrt(3) w.p. 1/5.
OCTANARY_UNITS = (1.0 + 0j, -1.0 + 0j, 1j, -1j)
OCTANARY_MAGNITUDES = ((np.sqrt(2.0) / 2.0, Fraction(4, 5)), (np.sqrt(3.0), Fraction(1, 5)))


def octanary_atoms():
    """The eight atoms of the octanary law as ``(unit, magnitude_squared, probability)``.

    Magnitudes are returned squared (1/2 or 3) so callers can enumerate moments
    with exact rational arithmetic.
    """
    atoms = []
    for unit in OCTANARY_UNITS:
        for mag_sq, prob in ((Fraction(1, 2), Fraction(4, 5)), (Fraction(3), Fraction(1, 5))):
            atoms.append((unit, mag_sq, prob / 4))
    return atoms


def splitmix64(x):
    """One round of the SplitMix64 output function on a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed, index):
    """Mix a base seed and a stream index into an independent 64-bit seed.

    ``derive_seed(s, i) = splitmix64(splitmix64(s) ^ i)``.  Used for per-trial
    and per-component streams so that trials never share random state.
    """
    base_seed = check_seed(base_seed)
    return splitmix64(splitmix64(base_seed) ^ (int(index) & _MASK64))


def sample_octanary(rng, size=None):
    """Draw i.i.d. samples ``d = b1 * b2`` from the octanary law."""
    units = np.asarray(OCTANARY_UNITS)[rng.integers(0, 4, size=size)]
    big = rng.random(size=size) < 0.2
    mags = np.where(big, np.sqrt(3.0), np.sqrt(2.0) / 2.0)
    out = units * mags
    if size is None:
        return complex(out)
    return out


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """Immutable measurement matrix plus affine offsets.

    Attributes
    ----------
    model : str
        ``"gaussian"``, ``"cdp"``, or ``"custom"`` for user-supplied rows.
    n, m : int
        Signal dimension and number of rows.
    L : int
        Number of coded patterns (0 for Gaussian).
    seed : int
        Seed the ensemble was generated from.
    rows : ndarray of shape (m, n)
        Row ``j`` is ``a_j^*``.
    offsets : ndarray of shape (m,)
        The affine offsets ``b_j``.
    patterns : ndarray of shape (L, n) or None
        CDP modulation patterns ``d_l[t]``.
    """

    model: str
    n: int
    m: int
    L: int
    seed: int
    rows: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)
    patterns: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidArgumentError(f"unknown model {self.model!r}")
        if self.rows.shape != (self.m, self.n):
            raise InvalidArgumentError(f"rows have shape {self.rows.shape}, expected {(self.m, self.n)}")
        if self.offsets.shape != (self.m,):
            raise InvalidArgumentError("offsets must have one entry per row")
        if self.model == CDP:
            if self.patterns is None or self.patterns.shape != (self.L, self.n):
                raise InvalidArgumentError("CDP ensembles need (L, n) patterns")
            if self.m != self.n * self.L:
                raise InvalidArgumentError("CDP ensembles need m = n * L")
        for arr in (self.rows, self.offsets, self.patterns):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def b(self):
        """The common offset when all offsets are equal, else ``None``."""
        if np.all(self.offsets == self.offsets[0]):
            return complex(self.offsets[0])
        return None

    @property
    def b_magnitude(self):
        return float(np.max(np.abs(self.offsets)))

    def forward(self, x, method="dense"):
        """Return the ``m`` values ``a_j^* x`` (without offsets).

        ``method="fft"`` evaluates CDP ensembles block-by-block as the DFT of
        ``conj(d_l) * x``; for Gaussian ensembles both methods use the matrix.
        """
        x = check_complex_vector(x, self.n)
        if method == "fft" and self.model == CDP:
            return np.fft.fft(np.conj(self.patterns) * x[None, :], axis=1).ravel()
        if method not in ("dense", "fft"):
            raise InvalidArgumentError(f"unknown method {method!r}")
        return self.rows @ x

    def subset(self, index):
        """The rows selected by ``index`` as a ``"custom"`` ensemble.

        Used to carve resampling blocks; a block of a CDP ensemble is no longer
        a complete set of patterns, so the FFT path is not carried over.
        """
        rows = np.array(self.rows[index])
        return MeasurementEnsemble(CUSTOM, self.n, rows.shape[0], 0, self.seed,
                                   rows, np.array(self.offsets[index]))


def from_rows(rows, b=DEFAULT_B, seed=0):
    """Wrap an explicit measurement matrix (rows are ``a_j^*``) as an ensemble."""
    rows = np.array(check_complex_matrix(rows, "rows"))
    m, n = rows.shape
    return MeasurementEnsemble(CUSTOM, n, m, 0, check_seed(seed), rows, check_offsets(b, m))


def gen_gaussian(n, m, seed, b=DEFAULT_B):
    """Complex Gaussian ensemble with entries ``N(0, 1/2) + i N(0, 1/2)``."""
    n = check_positive_int(n, "n")
    m = check_positive_int(m, "m")
    seed = check_seed(seed)
    rng = np.random.default_rng(seed)
    scale = np.sqrt(0.5)
    rows = scale * rng.standard_normal((m, n)) + 1j * scale * rng.standard_normal((m, n))
    return MeasurementEnsemble(GAUSSIAN, n, m, 0, seed, rows, check_offsets(b, m))


def dft_rows(n):
    """Unnormalized DFT matrix whose row ``k`` is ``f_k^*``."""
    k = np.arange(n)
    # reduce the exponent mod n before exponentiating to keep the phases exact
    return np.exp(-2j * np.pi * (np.outer(k, k) % n) / n)


def cdp_from_patterns(patterns, b=DEFAULT_B, seed=0):
    """Build a CDP ensemble from explicit ``(L, n)`` modulation patterns."""
    patterns = np.array(check_complex_matrix(patterns, "patterns"))
    L, n = patterns.shape
    F = dft_rows(n)
    # row (l, k) = f_k^* D_l^*  ->  F[k, t] * conj(d_l[t])
    rows = (F[None, :, :] * np.conj(patterns)[:, None, :]).reshape(L * n, n)
    return MeasurementEnsemble(CDP, n, L * n, L, check_seed(seed), rows,
                               check_offsets(b, L * n), patterns)


def gen_cdp(n, L, seed, b=DEFAULT_B):
    """Admissible CDP ensemble with octanary modulation patterns."""
    n = check_positive_int(n, "n")
    L = check_positive_int(L, "L")
    seed = check_seed(seed)
    rng = np.random.default_rng(seed)
    patterns = sample_octanary(rng, size=(L, n))
    return cdp_from_patterns(patterns, b=b, seed=seed)


def generate(model, n, seed, m=None, L=None, b=DEFAULT_B):
    """Dispatch to :func:`gen_gaussian` or :func:`gen_cdp`."""
    if model == GAUSSIAN:
        if m is None:
            raise InvalidArgumentError("the Gaussian model needs m")
        return gen_gaussian(n, m, seed, b=b)
    if model == CDP:
        if L is None:
            raise InvalidArgumentError("the CDP model needs L")
        return gen_cdp(n, L, seed, b=b)
    raise InvalidArgumentError(f"unknown model {model!r}")


def random_signal(n, seed):
    """Unit-norm complex standard Gaussian signal."""
    n = check_positive_int(n, "n")
    rng = np.random.default_rng(check_seed(seed))
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return x / np.linalg.norm(x)


@dataclass(frozen=True, eq=False)
class ObservationSet:
    y: np.ndarray
    source_seed: int

    def __post_init__(self):
        self.y.flags.writeable = False

    def __len__(self):
        return self.y.shape[0]


def measure(ensemble, x, method="dense"):
    """Noiseless observations ``y_j = |a_j^* x + b_j|^2``."""
    x = check_complex_vector(x, ensemble.n)
    w = ensemble.forward(x, method=method) + ensemble.offsets
    y = w.real ** 2 + w.imag ** 2
    return ObservationSet(y, ensemble.seed)


def save_ensemble(ensemble, path):
    """Write ``<path>.json`` (header) and ``<path>.bin`` (interleaved float64 rows).

    The binary sidecar holds the row-major matrix as little-endian
    ``(re, im)`` pairs.  Only ensembles with a single common offset can be
    written, since the header stores one ``b``.
    """
    path = Path(path)
    b = ensemble.b
    if b is None:
        raise InvalidArgumentError("only constant-offset ensembles can be serialized")
    header = {
        "model": ensemble.model,
        "n": ensemble.n,
        "m": ensemble.m,
        "L": ensemble.L,
        "seed": ensemble.seed,
        "b_re": b.real,
        "b_im": b.imag,
    }
    json_path = path.with_suffix(".json")
    bin_path = path.with_suffix(".bin")
    json_path.write_text(json.dumps(header, indent=2) + "\n")
    interleaved = np.empty((ensemble.m, 2 * ensemble.n), dtype="<f8")
    interleaved[:, 0::2] = ensemble.rows.real
    interleaved[:, 1::2] = ensemble.rows.imag
    bin_path.write_bytes(interleaved.tobytes(order="C"))
    return json_path, bin_path


def load_ensemble(path):
    """Inverse of :func:`save_ensemble`."""
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    m, n, L = header["m"], header["n"], header["L"]
    raw = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
    if raw.size != 2 * m * n:
        raise InvalidArgumentError(f"sidecar holds {raw.size} floats, expected {2 * m * n}")
    raw = raw.reshape(m, 2 * n)
    rows = raw[:, 0::2] + 1j * raw[:, 1::2]
    offsets = np.full(m, complex(header["b_re"], header["b_im"]))
    patterns = None
    if header["model"] == CDP:
        # the k = 0 row of block l is conj(d_l)
        patterns = np.conj(rows[::n]).copy()
    return MeasurementEnsemble(header["model"], n, m, L, header["seed"], rows, offsets, patterns)
