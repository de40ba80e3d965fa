"""Trigonometric spectral fields on a rectangular conducting cavity.

Three product-trig families realize the boundary conditions of the model:

* scalar fields vanish on all six walls (sine series along every axis),
* "Maxwell" vector fields have zero tangential components and zero normal
  derivative of the normal component (cosine along the component's own
  axis, sine along the other two),
* their curls live in the dual parity class (sine along the component's
  own axis, cosine along the other two).

Coefficients always refer to L2-orthonormal basis functions, so the
coefficient 2-norm is the L2 norm of the field.  Along an axis with N
retained modes the collocation grid has P = N + 1 cell-centered points
x_n = (n + 1/2) L / P.  The extra point keeps every retained mode (sine
k = 1..N, cosine k = 0..N) strictly below the grid Nyquist, which makes
the forward/inverse transforms, Parseval, and all coefficient-space
operators below exact to rounding rather than merely spectrally accurate.
Differentiation is closed on the retained ranges: d/dx maps sine k to
cosine k and cosine k to sine k (k = 0 maps to zero).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

SIN = "sin"
COS = "cos"

SCALAR_PARITY = (SIN, SIN, SIN)


class BasisFamily(enum.Enum):
    DIRICHLET_SCALAR = "dirichlet-scalar"
    MAXWELL = "maxwell-vector"
    CURL_DUAL = "curl-dual-vector"


def vector_parities(family: BasisFamily) -> tuple[tuple[str, str, str], ...]:
    """Per-axis parity of each vector component of the family."""
    if family is BasisFamily.MAXWELL:
        return tuple(
            tuple(COS if ax == comp else SIN for ax in range(3)) for comp in range(3)
        )
    if family is BasisFamily.CURL_DUAL:
        return tuple(
            tuple(SIN if ax == comp else COS for ax in range(3)) for comp in range(3)
        )
    raise ValueError(f"not a vector family: {family}")


class DomainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoxDomain:
    """Open box (0,L1)x(0,L2)x(0,L3) with per-axis spectral resolution.

    ``modes[i]`` is the number of retained sine modes along axis i; cosine
    axes retain one more (k = 0..modes[i]).  ``npts[i] = modes[i] + 1``
    collocation points per axis, cell centered.
    """

    lengths: tuple[float, float, float]
    modes: tuple[int, int, int]
    npts: tuple[int, int, int] = field(init=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        L = tuple(float(x) for x in self.lengths)
        N = tuple(int(n) for n in self.modes)
        if len(L) != 3 or len(N) != 3:
            raise DomainError("lengths and modes must have three entries")
        if any(not np.isfinite(x) or x <= 0 for x in L):
            raise DomainError(f"box lengths must be positive and finite, got {L}")
        if any(n < 1 for n in N):
            raise DomainError(f"mode counts must be >= 1, got {N}")
        object.__setattr__(self, "lengths", L)
        object.__setattr__(self, "modes", N)
        object.__setattr__(self, "npts", tuple(n + 1 for n in N))

    # -- geometry ----------------------------------------------------------

    @property
    def cell_volume(self) -> float:
        """Quadrature weight of one collocation cell."""
        v = 1.0
        for L, P in zip(self.lengths, self.npts):
            v *= L / P
        return v

    def axis_nodes(self, ax: int) -> np.ndarray:
        L, P = self.lengths[ax], self.npts[ax]
        return (np.arange(P) + 0.5) * (L / P)

    def grid(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Meshgrid of collocation nodes, shape npts each, indexing 'ij'."""
        key = "grid"
        if key not in self._cache:
            self._cache[key] = np.meshgrid(
                *(self.axis_nodes(ax) for ax in range(3)), indexing="ij"
            )
        return self._cache[key]

    # -- mode bookkeeping ---------------------------------------------------

    def axis_mode_count(self, parity: str, ax: int) -> int:
        return self.modes[ax] if parity == SIN else self.modes[ax] + 1

    def coeff_shape(self, parities: tuple[str, str, str]) -> tuple[int, int, int]:
        return tuple(self.axis_mode_count(p, ax) for ax, p in enumerate(parities))

    @property
    def scalar_shape(self) -> tuple[int, int, int]:
        return self.coeff_shape(SCALAR_PARITY)

    def kappa_axis(self, parity: str, ax: int) -> np.ndarray:
        """Wavevector values k pi / L along one axis for the given parity."""
        key = ("kappa", parity, ax)
        if key not in self._cache:
            N, L = self.modes[ax], self.lengths[ax]
            k = np.arange(1, N + 1) if parity == SIN else np.arange(0, N + 1)
            self._cache[key] = k * np.pi / L
        return self._cache[key]

    def kappa_sq(self, parities: tuple[str, str, str]) -> np.ndarray:
        """|kappa|^2 on the coefficient grid of the given parity class."""
        key = ("ksq", parities)
        if key not in self._cache:
            axes = [self.kappa_axis(p, ax) for ax, p in enumerate(parities)]
            self._cache[key] = (
                axes[0][:, None, None] ** 2
                + axes[1][None, :, None] ** 2
                + axes[2][None, None, :] ** 2
            )
        return self._cache[key]

    def dealias_mask(self, parities: tuple[str, str, str]) -> np.ndarray:
        """Boolean keep-mask implementing the 2/3 rule on mode numbers."""
        key = ("mask", parities)
        if key not in self._cache:
            ms = []
            for ax, p in enumerate(parities):
                N = self.modes[ax]
                cut = (2 * N) // 3
                k = np.arange(1, N + 1) if p == SIN else np.arange(0, N + 1)
                ms.append(k <= cut)
            self._cache[key] = (
                ms[0][:, None, None] & ms[1][None, :, None] & ms[2][None, None, :]
            )
        return self._cache[key]

    # -- transforms ----------------------------------------------------------
    # Forward ("analyze") is the quadrature projection onto the orthonormal
    # basis; inverse ("synthesize") is exact interpolation.  Both are carried
    # by scipy's type-II DST/DCT pair, which accept complex input.

    def _sin_scale(self, ax: int) -> float:
        L, P = self.lengths[ax], self.npts[ax]
        return (L / P) * np.sqrt(2.0 / L) / 2.0

    def _cos_scale(self, ax: int) -> np.ndarray:
        key = ("cscale", ax)
        if key not in self._cache:
            L, P = self.lengths[ax], self.npts[ax]
            s = np.full(P, (L / P) * np.sqrt(2.0 / L) / 2.0)
            s[0] = (L / P) * np.sqrt(1.0 / L) / 2.0
            self._cache[key] = s
        return self._cache[key]

    def _analyze_axis(
        self, arr: np.ndarray, parity: str, ax: int, arr_ax: int
    ) -> np.ndarray:
        P = self.npts[ax]
        if parity == SIN:
            y = sfft.dst(arr, type=2, axis=arr_ax)
            sl = [slice(None)] * arr.ndim
            sl[arr_ax] = slice(0, P - 1)  # drop the grid-Nyquist sine mode
            return y[tuple(sl)] * self._sin_scale(ax)
        y = sfft.dct(arr, type=2, axis=arr_ax)
        shape = [1] * arr.ndim
        shape[arr_ax] = P
        return y * self._cos_scale(ax).reshape(shape)

    def _synthesize_axis(
        self, coeffs: np.ndarray, parity: str, ax: int, arr_ax: int
    ) -> np.ndarray:
        P = self.npts[ax]
        if parity == SIN:
            shape = list(coeffs.shape)
            shape[arr_ax] = P
            y = np.zeros(shape, dtype=coeffs.dtype)
            sl = [slice(None)] * coeffs.ndim
            sl[arr_ax] = slice(0, P - 1)
            y[tuple(sl)] = coeffs / self._sin_scale(ax)
            return sfft.idst(y, type=2, axis=arr_ax)
        shape = [1] * coeffs.ndim
        shape[arr_ax] = P
        y = coeffs / self._cos_scale(ax).reshape(shape)
        return sfft.idct(y, type=2, axis=arr_ax)

    def analyze(
        self,
        samples: np.ndarray,
        parities: tuple[str, str, str],
        dealias: bool = False,
    ) -> np.ndarray:
        """Collocation samples -> orthonormal coefficients (L2 projection).

        Leading axes beyond the trailing three are treated as a batch.
        """
        if samples.shape[-3:] != self.npts:
            raise DomainError(
                f"sample shape {samples.shape} does not match grid {self.npts}"
            )
        out = samples
        nd = samples.ndim
        for ax, p in enumerate(parities):
            out = self._analyze_axis(out, p, ax, ax + nd - 3)
        if dealias:
            out = out * self.dealias_mask(parities)
        return out

    def synthesize(
        self, coeffs: np.ndarray, parities: tuple[str, str, str]
    ) -> np.ndarray:
        """Orthonormal coefficients -> collocation samples (exact).

        Leading axes beyond the trailing three are treated as a batch.
        """
        if coeffs.shape[-3:] != self.coeff_shape(parities):
            raise DomainError(
                f"coefficient shape {coeffs.shape} does not match "
                f"{self.coeff_shape(parities)} for parity {parities}"
            )
        out = coeffs
        nd = coeffs.ndim
        for ax, p in enumerate(parities):
            out = self._synthesize_axis(out, p, ax, ax + nd - 3)
        return out

    # -- boundary evaluation -------------------------------------------------

    def _face_basis(self, parity: str, ax: int, pts: np.ndarray) -> np.ndarray:
        """Basis functions of one axis evaluated at arbitrary points.

        Returns a matrix with shape (len(pts), mode count).
        """
        L = self.lengths[ax]
        if parity == SIN:
            k = np.arange(1, self.modes[ax] + 1)
            return np.sqrt(2.0 / L) * np.sin(np.outer(pts, k) * np.pi / L)
        k = np.arange(0, self.modes[ax] + 1)
        m = np.sqrt(2.0 / L) * np.cos(np.outer(pts, k) * np.pi / L)
        m[:, 0] = np.sqrt(1.0 / L)
        return m

    def eval_on_face(
        self,
        coeffs: np.ndarray,
        parities: tuple[str, str, str],
        face_axis: int,
        side: int,
        n_tangent: int = 17,
    ) -> np.ndarray:
        """Evaluate a coefficient field on one wall of the box.

        ``side`` is 0 for the x_axis = 0 wall, 1 for x_axis = L.  Tangential
        coordinates run on a uniform closed grid with ``n_tangent`` points.
        """
        x_b = np.array([0.0 if side == 0 else self.lengths[face_axis]])
        out = coeffs
        # contract the boundary axis first, then the tangential ones
        vec = self._face_basis(parities[face_axis], face_axis, x_b)[0]
        out = np.tensordot(out, vec, axes=([face_axis], [0]))
        for ax in (ax for ax in range(3) if ax != face_axis):
            pts = np.linspace(0.0, self.lengths[ax], n_tangent)
            mat = self._face_basis(parities[ax], ax, pts)
            out = np.tensordot(out, mat, axes=([0], [1]))
        return out


def make_domain(lengths, modes) -> BoxDomain:
    """Validate and build a BoxDomain."""
    return BoxDomain(tuple(lengths), tuple(modes))


# -- fields -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralScalar:
    """Scalar field as orthonormal sine-series coefficients.

    Treat instances as immutable values; operations return new fields.
    """

    domain: BoxDomain
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.domain.scalar_shape:
            raise DomainError(
                f"scalar coefficients {self.coeffs.shape} != {self.domain.scalar_shape}"
            )

    @classmethod
    def zeros(cls, domain: BoxDomain, dtype=np.complex128) -> "SpectralScalar":
        return cls(domain, np.zeros(domain.scalar_shape, dtype=dtype))

    @classmethod
    def from_samples(
        cls, domain: BoxDomain, samples: np.ndarray, dealias: bool = False
    ) -> "SpectralScalar":
        return cls(domain, domain.analyze(samples, SCALAR_PARITY, dealias=dealias))

    def samples(self) -> np.ndarray:
        return self.domain.synthesize(self.coeffs, SCALAR_PARITY)

    def copy(self) -> "SpectralScalar":
        return SpectralScalar(self.domain, self.coeffs.copy())


@dataclass(frozen=True, eq=False)
class SpectralVector:
    """Vector field in one of the two vector parity families."""

    domain: BoxDomain
    family: BasisFamily
    comps: tuple[np.ndarray, np.ndarray, np.ndarray]

    def __post_init__(self):
        pars = vector_parities(self.family)
        for i, (c, p) in enumerate(zip(self.comps, pars)):
            want = self.domain.coeff_shape(p)
            if c.shape != want:
                raise DomainError(
                    f"component {i} coefficients {c.shape} != {want} "
                    f"for family {self.family.value}"
                )

    @classmethod
    def zeros(
        cls, domain: BoxDomain, family: BasisFamily, dtype=np.float64
    ) -> "SpectralVector":
        pars = vector_parities(family)
        comps = tuple(np.zeros(domain.coeff_shape(p), dtype=dtype) for p in pars)
        return cls(domain, family, comps)

    @classmethod
    def from_samples(
        cls,
        domain: BoxDomain,
        family: BasisFamily,
        samples,
        dealias: bool = False,
    ) -> "SpectralVector":
        pars = vector_parities(family)
        comps = tuple(
            domain.analyze(np.asarray(samples[i]), pars[i], dealias=dealias)
            for i in range(3)
        )
        return cls(domain, family, comps)

    def samples(self) -> np.ndarray:
        pars = vector_parities(self.family)
        return np.stack(
            [self.domain.synthesize(c, p) for c, p in zip(self.comps, pars)]
        )

    def copy(self) -> "SpectralVector":
        return SpectralVector(
            self.domain, self.family, tuple(c.copy() for c in self.comps)
        )

    def __add__(self, other: "SpectralVector") -> "SpectralVector":
        _check_same_family(self, other)
        return SpectralVector(
            self.domain,
            self.family,
            tuple(a + b for a, b in zip(self.comps, other.comps)),
        )

    def __sub__(self, other: "SpectralVector") -> "SpectralVector":
        _check_same_family(self, other)
        return SpectralVector(
            self.domain,
            self.family,
            tuple(a - b for a, b in zip(self.comps, other.comps)),
        )

    def __mul__(self, s: float) -> "SpectralVector":
        return SpectralVector(
            self.domain, self.family, tuple(c * s for c in self.comps)
        )

    __rmul__ = __mul__


def _check_same_family(a: SpectralVector, b: SpectralVector):
    if a.domain is not b.domain or a.family is not b.family:
        raise DomainError("vector fields live on different domains or families")


# -- differential operators (exact in coefficient space) ----------------------


def _axis_col(domain: BoxDomain, parity: str, ax: int) -> np.ndarray:
    """kappa values of one axis shaped for broadcasting along that axis."""
    k = domain.kappa_axis(parity, ax)
    shape = [1, 1, 1]
    shape[ax] = len(k)
    return k.reshape(shape)


def gradient(f: SpectralScalar) -> SpectralVector:
    """Gradient of a scalar; lands in the Maxwell parity family.

    Along axis i the sine mode k maps to cosine mode k with factor kappa,
    so component i has zero cosine-0 slice.
    """
    dom = f.domain
    pars = vector_parities(BasisFamily.MAXWELL)
    comps = []
    for i in range(3):
        out = np.zeros(dom.coeff_shape(pars[i]), dtype=f.coeffs.dtype)
        sl = [slice(None)] * 3
        sl[i] = slice(1, None)
        out[tuple(sl)] = f.coeffs * _axis_col(dom, SIN, i)
        comps.append(out)
    return SpectralVector(dom, BasisFamily.MAXWELL, tuple(comps))


def divergence(v: SpectralVector) -> SpectralScalar:
    """Divergence of a Maxwell-family vector field (sine-series scalar)."""
    if v.family is not BasisFamily.MAXWELL:
        raise DomainError("divergence is defined on the Maxwell family only")
    dom = v.domain
    dtype = np.result_type(*(c.dtype for c in v.comps))
    out = np.zeros(dom.scalar_shape, dtype=dtype)
    for i in range(3):
        sl = [slice(None)] * 3
        sl[i] = slice(1, None)
        out -= v.comps[i][tuple(sl)] * _axis_col(dom, SIN, i)
    return SpectralScalar(dom, out)


def axis_derivative(domain: BoxDomain, coeffs: np.ndarray, parities, axis: int):
    """d/dx along one axis in coefficient space; flips that axis's parity.

    sine mode k -> +kappa cosine mode k; cosine mode k -> -kappa sine mode k
    (the cosine-0 mode is constant and drops out).  Returns the derivative
    coefficients together with the new parity tuple, which in general is not
    one of the three named families.
    """
    new_par = tuple(
        (COS if p == SIN else SIN) if ax == axis else p
        for ax, p in enumerate(parities)
    )
    out = np.zeros(domain.coeff_shape(new_par), dtype=coeffs.dtype)
    sl = [slice(None)] * 3
    sl[axis] = slice(1, None)
    col = _axis_col(domain, SIN, axis)
    if parities[axis] == SIN:
        out[tuple(sl)] = coeffs * col
    else:
        out[...] = -coeffs[tuple(sl)] * col
    return out, new_par


def curl(v: SpectralVector) -> SpectralVector:
    """Curl, mapping Maxwell -> curl-dual and curl-dual -> Maxwell.

    Coefficient action per axis: d/dx sends sine k -> cosine k with +kappa
    and cosine k -> sine k with -kappa.  The two directions are exact
    adjoints of each other in coefficient space.
    """
    dom = v.domain
    dtype = np.result_type(*(c.dtype for c in v.comps))
    if v.family is BasisFamily.MAXWELL:
        out_family = BasisFamily.CURL_DUAL
    elif v.family is BasisFamily.CURL_DUAL:
        out_family = BasisFamily.MAXWELL
    else:
        raise DomainError("curl needs a vector family")
    pars_out = vector_parities(out_family)
    comps = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        out = np.zeros(dom.coeff_shape(pars_out[i]), dtype=dtype)
        # (curl v)_i = d_j v_k - d_k v_j
        for sgn, dax, src in ((1.0, j, v.comps[k]), (-1.0, k, v.comps[j])):
            if v.family is BasisFamily.MAXWELL:
                # source axis dax has sine parity; target gets cosine k >= 1
                sl = [slice(None)] * 3
                sl[dax] = slice(1, None)
                out[tuple(sl)] += sgn * src * _axis_col(dom, SIN, dax)
            else:
                # source axis dax has cosine parity; target gets sine k >= 1
                sl = [slice(None)] * 3
                sl[dax] = slice(1, None)
                out -= sgn * src[tuple(sl)] * _axis_col(dom, SIN, dax)
        comps.append(out)
    return SpectralVector(dom, out_family, tuple(comps))


def laplacian(f):
    """Laplacian: multiplication by -|kappa|^2 in any parity class."""
    if isinstance(f, SpectralScalar):
        return SpectralScalar(f.domain, -f.domain.kappa_sq(SCALAR_PARITY) * f.coeffs)
    pars = vector_parities(f.family)
    comps = tuple(
        -f.domain.kappa_sq(p) * c for c, p in zip(f.comps, pars)
    )
    return SpectralVector(f.domain, f.family, comps)


# -- norms and inner products --------------------------------------------------


def _coeff_blocks(f) -> list[tuple[np.ndarray, tuple[str, str, str]]]:
    if isinstance(f, SpectralScalar):
        return [(f.coeffs, SCALAR_PARITY)]
    return list(zip(f.comps, vector_parities(f.family)))


def l2_norm(f) -> float:
    return float(np.sqrt(sum(np.sum(np.abs(c) ** 2) for c, _ in _coeff_blocks(f))))


def h1_norm_sq(f) -> float:
    dom = f.domain
    return float(
        sum(
            np.sum((1.0 + dom.kappa_sq(p)) * np.abs(c) ** 2)
            for c, p in _coeff_blocks(f)
        )
    )


def h1_norm(f) -> float:
    return float(np.sqrt(h1_norm_sq(f)))


def h2_norm(f) -> float:
    dom = f.domain
    s = sum(
        np.sum((1.0 + dom.kappa_sq(p)) ** 2 * np.abs(c) ** 2)
        for c, p in _coeff_blocks(f)
    )
    return float(np.sqrt(s))


def grad_norm_sq(f) -> float:
    """Sum of |kappa|^2-weighted coefficient energy: ||grad f||_L2^2, exact."""
    dom = f.domain
    return float(
        sum(np.sum(dom.kappa_sq(p) * np.abs(c) ** 2) for c, p in _coeff_blocks(f))
    )


def lp_norm(f, p: float) -> float:
    """Collocation-quadrature Lp norm, 2 <= p <= 6."""
    if not (2.0 <= p <= 6.0):
        raise ValueError(f"p must lie in [2, 6], got {p}")
    dom = f.domain
    if isinstance(f, SpectralScalar):
        mag = np.abs(f.samples())
    else:
        s = f.samples()
        mag = np.sqrt(np.sum(np.abs(s) ** 2, axis=0))
    return float(np.sum(mag**p) ** (1.0 / p) * dom.cell_volume ** (1.0 / p))


def inner_l2(f, g) -> complex:
    """Coefficient-space L2 inner product, conjugate-linear in the first slot."""
    blocks_f, blocks_g = _coeff_blocks(f), _coeff_blocks(g)
    return complex(
        sum(np.vdot(cf, cg) for (cf, _), (cg, _) in zip(blocks_f, blocks_g))
    )


def pointwise_product(a, b) -> np.ndarray:
    """Nodal product of two fields (or raw sample arrays) on the same grid."""
    sa = a.samples() if hasattr(a, "samples") else np.asarray(a)
    sb = b.samples() if hasattr(b, "samples") else np.asarray(b)
    if sa.shape[-3:] != sb.shape[-3:]:
        raise DomainError(f"sample grids differ: {sa.shape} vs {sb.shape}")
    return sa * sb
