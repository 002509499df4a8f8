# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of the pure-Python kernel backend.

Mirrors pitomo._kernels.pure operation for operation; compiled with
-ffp-contract=off so both backends produce bit-identical results.  Any
change must be made in lockstep with pure.py.
"""

from libc.math cimport cos, exp, fabs, floor, log, sqrt
from libc.stdlib cimport free, malloc

BACKEND = "fast"

cdef extern from *:
    """
    typedef unsigned long long u64;
    """
    ctypedef unsigned long long u64


cdef double _INV_2_53 = 1.0 / 9007199254740992.0
cdef u64 _GOLDEN = 0x9E3779B97F4A7C15ULL


# ---------------------------------------------------------------------------
# dense complex matrix kernels


cdef double complex * _to_c(object seq, Py_ssize_t n) except NULL:
    cdef double complex * buf = <double complex *> malloc(n * sizeof(double complex))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(n):
        buf[i] = seq[i]
    return buf


cdef list _to_list(double complex * buf, Py_ssize_t n):
    cdef list out = [0j] * n
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = buf[i]
    return out


def mat_mul(a, Py_ssize_t ar, Py_ssize_t ac, b, Py_ssize_t br, Py_ssize_t bc):
    """Product of row-major complex matrices a (ar x ac) and b (br x bc)."""
    if ac != br:
        raise ValueError(f"matrix product shape mismatch: {ar}x{ac} @ {br}x{bc}")
    cdef double complex * ca = _to_c(a, ar * ac)
    cdef double complex * cb
    cdef double complex * co
    cdef Py_ssize_t i, j, k, ia
    cdef double complex s
    try:
        cb = _to_c(b, br * bc)
    except BaseException:
        free(ca)
        raise
    co = <double complex *> malloc(ar * bc * sizeof(double complex))
    if co == NULL:
        free(ca)
        free(cb)
        raise MemoryError()
    for i in range(ar):
        ia = i * ac
        for j in range(bc):
            s = 0
            for k in range(ac):
                s = s + ca[ia + k] * cb[k * bc + j]
            co[i * bc + j] = s
    out = _to_list(co, ar * bc)
    free(ca)
    free(cb)
    free(co)
    return out


def mat_dagger(a, Py_ssize_t r, Py_ssize_t c):
    """Conjugate transpose; returns a c x r matrix."""
    cdef double complex * ca = _to_c(a, r * c)
    cdef double complex * co = <double complex *> malloc(r * c * sizeof(double complex))
    cdef Py_ssize_t i, j, ic
    cdef double complex z
    if co == NULL:
        free(ca)
        raise MemoryError()
    for i in range(r):
        ic = i * c
        for j in range(c):
            z = ca[ic + j]
            co[j * r + i] = z.real - 1j * z.imag
    out = _to_list(co, r * c)
    free(ca)
    free(co)
    return out


def kron(a, Py_ssize_t ar, Py_ssize_t ac, b, Py_ssize_t br, Py_ssize_t bc):
    """Kronecker product; returns an (ar*br) x (ac*bc) matrix."""
    cdef Py_ssize_t rc = ac * bc
    cdef double complex * ca = _to_c(a, ar * ac)
    cdef double complex * cb
    cdef double complex * co
    cdef Py_ssize_t i, k, j, m, ro
    cdef double complex av
    try:
        cb = _to_c(b, br * bc)
    except BaseException:
        free(ca)
        raise
    co = <double complex *> malloc(ar * br * rc * sizeof(double complex))
    if co == NULL:
        free(ca)
        free(cb)
        raise MemoryError()
    for i in range(ar):
        for k in range(br):
            ro = (i * br + k) * rc
            for j in range(ac):
                av = ca[i * ac + j]
                for m in range(bc):
                    co[ro + j * bc + m] = av * cb[k * bc + m]
    out = _to_list(co, ar * br * rc)
    free(ca)
    free(cb)
    free(co)
    return out


def partial_trace(rho, dims, keep):
    """Trace out the subsystems not listed in ``keep`` (see pure twin)."""
    cdef Py_ssize_t nsub = len(dims)
    cdef Py_ssize_t n = 1
    cdef Py_ssize_t i
    for i in range(nsub):
        n *= dims[i]
    keep = tuple(sorted(keep))
    traced = tuple(i for i in range(nsub) if i not in keep)
    strides = [0] * nsub
    acc = 1
    for i in range(nsub - 1, -1, -1):
        strides[i] = acc
        acc *= dims[i]

    def offsets(subsys):
        offs = [0]
        for i in subsys:
            offs = [o + v * strides[i] for o in offs for v in range(dims[i])]
        return offs

    kept_offs_py = offsets(keep)
    traced_offs_py = offsets(traced)
    cdef Py_ssize_t dk = len(kept_offs_py)
    cdef Py_ssize_t dt = len(traced_offs_py)

    cdef double complex * cr = _to_c(rho, n * n)
    cdef Py_ssize_t * koff = <Py_ssize_t *> malloc(dk * sizeof(Py_ssize_t))
    cdef Py_ssize_t * toff = <Py_ssize_t *> malloc(dt * sizeof(Py_ssize_t))
    cdef double complex * co = <double complex *> malloc(dk * dk * sizeof(double complex))
    if koff == NULL or toff == NULL or co == NULL:
        free(cr); free(koff); free(toff); free(co)
        raise MemoryError()
    for i in range(dk):
        koff[i] = kept_offs_py[i]
    for i in range(dt):
        toff[i] = traced_offs_py[i]

    cdef Py_ssize_t ki, kj, t
    cdef Py_ssize_t oi, oj
    cdef double complex s
    for ki in range(dk):
        oi = koff[ki]
        for kj in range(dk):
            oj = koff[kj]
            s = 0
            for t in range(dt):
                s = s + cr[(oi + toff[t]) * n + (oj + toff[t])]
            co[ki * dk + kj] = s
    out = _to_list(co, dk * dk)
    free(cr); free(koff); free(toff); free(co)
    return out


def eigh(a, Py_ssize_t n, int max_sweeps=100):
    """Jacobi eigendecomposition of a Hermitian matrix (see pure twin)."""
    cdef double complex * m = <double complex *> malloc(n * n * sizeof(double complex))
    cdef double complex * v = <double complex *> malloc(n * n * sizeof(double complex))
    if m == NULL or v == NULL:
        free(m); free(v)
        raise MemoryError()
    cdef Py_ssize_t i, j, p, q, sweep
    cdef double complex h, g, u, uc, x, y, zz
    cdef double fro2, off2, thr, gm, alpha, beta, d, t, c, s

    try:
        for i in range(n):
            zz = a[i * n + i]
            m[i * n + i] = zz.real
            for j in range(i + 1, n):
                zz = a[i * n + j]
                h = a[j * n + i]
                h = 0.5 * (zz + (h.real - 1j * h.imag))
                m[i * n + j] = h
                m[j * n + i] = h.real - 1j * h.imag
        for i in range(n):
            for j in range(n):
                v[i * n + j] = 1.0 if i == j else 0.0

        fro2 = 0.0
        for i in range(n * n):
            fro2 = fro2 + m[i].real * m[i].real + m[i].imag * m[i].imag
        thr = sqrt(fro2)
        if thr < 1.0:
            thr = 1.0
        thr = 1e-13 * thr

        for sweep in range(max_sweeps):
            off2 = 0.0
            for i in range(n):
                for j in range(n):
                    if i != j:
                        off2 = (off2 + m[i * n + j].real * m[i * n + j].real
                                + m[i * n + j].imag * m[i * n + j].imag)
            if sqrt(off2) < thr:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    g = m[p * n + q]
                    gm = sqrt(g.real * g.real + g.imag * g.imag)
                    if gm <= 1e-300:
                        continue
                    u = g.real / gm + 1j * (g.imag / gm)
                    uc = u.real - 1j * u.imag
                    alpha = m[p * n + p].real
                    beta = m[q * n + q].real
                    d = (alpha - beta) / (2.0 * gm)
                    if d >= 0.0:
                        t = 1.0 / (d + sqrt(d * d + 1.0))
                    else:
                        t = -1.0 / (-d + sqrt(d * d + 1.0))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    for i in range(n):
                        x = m[i * n + p]
                        y = m[i * n + q]
                        m[i * n + p] = c * x + (s * uc) * y
                        m[i * n + q] = (-s * u) * x + c * y
                    for j in range(n):
                        x = m[p * n + j]
                        y = m[q * n + j]
                        m[p * n + j] = c * x + (s * u) * y
                        m[q * n + j] = (-s * uc) * x + c * y
                    for i in range(n):
                        x = v[i * n + p]
                        y = v[i * n + q]
                        v[i * n + p] = c * x + (s * uc) * y
                        v[i * n + q] = (-s * u) * x + c * y

        vals = [m[i * n + i].real for i in range(n)]
        order = sorted(range(n), key=vals.__getitem__)
        svals = [vals[k] for k in order]
        svecs = [0j] * (n * n)
        for col in range(n):
            k = order[col]
            for i in range(n):
                svecs[i * n + col] = v[i * n + k]
        return svals, svecs
    finally:
        free(m)
        free(v)


# ---------------------------------------------------------------------------
# random numbers


cdef inline u64 _mix64(u64 z) noexcept:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline u64 _rotl(u64 x, int k) noexcept:
    return (x << k) | (x >> (64 - k))


cdef double[10] _LOGGAM_A
_LOGGAM_A[0] = 8.333333333333333e-02
_LOGGAM_A[1] = -2.777777777777778e-03
_LOGGAM_A[2] = 7.936507936507937e-04
_LOGGAM_A[3] = -5.952380952380952e-04
_LOGGAM_A[4] = 8.417508417508418e-04
_LOGGAM_A[5] = -1.917526917526918e-03
_LOGGAM_A[6] = 6.410256410256410e-03
_LOGGAM_A[7] = -2.955065359477124e-02
_LOGGAM_A[8] = 1.796443723688307e-01
_LOGGAM_A[9] = -1.392432216905901e+00

cdef double _LOG_2PI = 1.8378770664093453


cpdef double loggam(double x):
    """log(Gamma(x)) for x >= 1 via a fixed Stirling series (portable)."""
    cdef double x0, x2, gl0, gl
    cdef int n, k
    if x == 1.0 or x == 2.0:
        return 0.0
    x0 = x
    n = 0
    if x <= 7.0:
        n = <int>(7 - x)
        x0 = x + n
    x2 = 1.0 / (x0 * x0)
    gl0 = _LOGGAM_A[9]
    for k in range(8, -1, -1):
        gl0 = gl0 * x2 + _LOGGAM_A[k]
    gl = gl0 / x0 + 0.5 * _LOG_2PI + (x0 - 0.5) * log(x0) - x0
    if x <= 7.0:
        for k in range(n):
            gl -= log(x0 - 1.0)
            x0 -= 1.0
    return gl


cdef class Rng:
    """xoshiro256** stream addressed by (seed, stream); see pure twin."""

    cdef u64 s0, s1, s2, s3

    def __init__(self, seed, stream=0):
        cdef u64 z = (<u64> seed) + _GOLDEN * (<u64> stream)
        cdef u64 s = _mix64(z)
        cdef u64 st[4]
        cdef int i
        for i in range(4):
            s = s + _GOLDEN
            st[i] = _mix64(s)
        if st[0] == 0 and st[1] == 0 and st[2] == 0 and st[3] == 0:
            st[0] = _GOLDEN
        self.s0 = st[0]
        self.s1 = st[1]
        self.s2 = st[2]
        self.s3 = st[3]

    cdef inline u64 _next(self) noexcept:
        cdef u64 result = _rotl(self.s1 * 5, 7) * 9
        cdef u64 t = self.s1 << 17
        self.s2 ^= self.s0
        self.s3 ^= self.s1
        self.s1 ^= self.s2
        self.s0 ^= self.s3
        self.s2 ^= t
        self.s3 = _rotl(self.s3, 45)
        return result

    def u64(self):
        return self._next()

    cpdef double random(self):
        """Uniform double in [0, 1)."""
        return <double>(self._next() >> 11) * _INV_2_53

    cpdef long long poisson(self, double mu):
        """Poisson variate with mean ``mu``; exact for all mu >= 0."""
        cdef double u, v, us, pmf, cdf, slam, loglam, a, b, invalpha, vr, kd
        cdef long long k
        if mu < 0.0 or mu != mu:
            raise ValueError(f"Poisson mean must be >= 0, got {mu}")
        if mu == 0.0:
            return 0
        if mu < 30.0:
            u = self.random()
            pmf = exp(-mu)
            cdf = pmf
            k = 0
            while u > cdf:
                k += 1
                pmf = pmf * (mu / k)
                cdf = cdf + pmf
                if k > 1000:
                    break
            return k
        slam = sqrt(mu)
        loglam = log(mu)
        b = 0.931 + 2.53 * slam
        a = -0.059 + 0.02483 * b
        invalpha = 1.1239 + 1.1328 / (b - 3.4)
        vr = 0.9277 - 3.6224 / (b - 2.0)
        while True:
            u = self.random() - 0.5
            v = self.random()
            us = 0.5 - fabs(u)
            kd = floor((2.0 * a / us + b) * u + mu + 0.43)
            k = <long long> kd
            if us >= 0.07 and v <= vr:
                return k
            if k < 0 or (us < 0.013 and v > us):
                continue
            if (log(v) + log(invalpha) - log(a / (us * us) + b)
                    <= kd * loglam - mu - loggam(kd + 1.0)):
                return k


# ---------------------------------------------------------------------------
# fringe-model residual


def sinusoid_sq_residual(phases, counts, double amp0, double vis, double delta):
    """Sum of squared residuals of counts against amp0*(1+vis*cos(phi+delta))."""
    cdef Py_ssize_t npts = len(phases)
    cdef double * cp = <double *> malloc(npts * sizeof(double))
    cdef double * cc = <double *> malloc(npts * sizeof(double))
    if cp == NULL or cc == NULL:
        free(cp); free(cc)
        raise MemoryError()
    cdef Py_ssize_t k
    cdef double s = 0.0
    cdef double model, d
    for k in range(npts):
        cp[k] = phases[k]
        cc[k] = counts[k]
    for k in range(npts):
        model = amp0 * (1.0 + vis * cos(cp[k] + delta))
        d = model - cc[k]
        s = s + d * d
    free(cp)
    free(cc)
    return s
