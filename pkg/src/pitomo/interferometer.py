"""Two-source interferometer: state construction, evolution and rates.

One photon pair is emitted coherently by one of two sources.  Source 1
carries the unknown idler polarization state (signal fixed H in path a,
idler in path b'); source 2 emits the reference pair (signal in path b,
idler in path b).  The joint state lives in the 8-dim basis

    {H_Sa H_Ib', H_Sa V_Ib', V_Sa H_Ib', V_Sa V_Ib',
     H_Sb H_Ib,  H_Sb V_Ib,  V_Sb H_Ib,  V_Sb V_Ib}

with source weights b1 (real) and b2 = b2_mag * e^{i phi}.  The idler
beams are aligned by an effective splitter that sends the b' modes to
the reference mode b with amplitude t_h/t_v and to a discarded witness
path w otherwise; this is realized as an isometry into a 12-dim space
so every intermediate object stays a valid state.  After tracing the
idler, the two signal paths are recombined on a balanced splitter
(Hadamard on paths, identity on polarization) and the H/V populations
of one output port are the detection rates.

Port convention: the detectors sit on the recombiner output where the
two source amplitudes add in phase at phi = 0; in matrix terms the
detected H/V rates are the first two diagonal elements after
recombination.  With this choice the exact pipeline reproduces the
closed-form rate formulas below, which is also what the reconstruction
inverts.  Closed-form fringes (fringing detector per setting):

    setting H:  r_H = (b1^2 + b2^2 p_h2
                       + 2 b1 b2 |t_h| sqrt(p_h p_h2) cos(phi - arg t_h)) / 2
                r_V = b2^2 p_v2 / 2                      (constant)
    setting V:  r_V = (b1^2 + b2^2 p_v2
                       + 2 I b1 b2 |t_v| sqrt(p_v p_v2)
                           cos(phi + theta - xi - arg t_v)) / 2
                r_H = b2^2 p_h2 / 2                      (constant)

where I is the idler purity parameter.  Rates are probabilities per
generated pair.  Both computation paths, the exact matrix evolution
(the oracle used in tests) and these closed forms (what the scans and
the reconstructor use), are public and agree to better than 1e-10.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

from . import _kernels as _k
from .qcore import ComplexMatrix, DensityMatrix
from .states import IdlerStateParams, SourceQ2Params

SQRT1_2 = 1.0 / math.sqrt(2.0)

BASIS_8 = (
    "H_Sa⊗H_Ib'", "H_Sa⊗V_Ib'", "V_Sa⊗H_Ib'", "V_Sa⊗V_Ib'",
    "H_Sb⊗H_Ib", "H_Sb⊗V_Ib", "V_Sb⊗H_Ib", "V_Sb⊗V_Ib",
)
BASIS_12 = (
    "H_Sa⊗H_Ib", "H_Sa⊗V_Ib", "H_Sa⊗H_Iw", "H_Sa⊗V_Iw",
    "V_Sa⊗H_Ib", "V_Sa⊗V_Ib", "V_Sa⊗H_Iw", "V_Sa⊗V_Iw",
    "H_Sb⊗H_Ib", "H_Sb⊗V_Ib", "V_Sb⊗H_Ib", "V_Sb⊗V_Ib",
)
SIGNAL_BASIS = ("H_Sa", "V_Sa", "H_Sb", "V_Sb")
OUTPUT_BASIS = ("H_det", "V_det", "H_aux", "V_aux")

# recombiner: Hadamard-like on the path factor, identity on polarization
_BS_RAW = [
    SQRT1_2 + 0j, 0j, SQRT1_2 + 0j, 0j,
    0j, SQRT1_2 + 0j, 0j, SQRT1_2 + 0j,
    SQRT1_2 + 0j, 0j, -SQRT1_2 + 0j, 0j,
    0j, SQRT1_2 + 0j, 0j, -SQRT1_2 + 0j,
]


class SignalSetting(str, enum.Enum):
    H = "H"
    V = "V"


@dataclass(frozen=True)
class InterferometerConfig:
    """Every physical knob of the two-source arrangement.

    coherence_l / coherence_lp tie the V polarization of source 1 to
    the H / V polarization of source 2; a physical (positive
    semidefinite) joint state requires both to equal the idler purity,
    which is what default construction does.  Values differing from the
    purity are accepted solely to build states that violate positivity
    on purpose.
    """

    b1: float
    b2_mag: float
    phi: float = 0.0
    t_h: complex = 1.0 + 0j
    t_v: complex = 1.0 + 0j
    idler: IdlerStateParams = IdlerStateParams.horizontal()
    q2: SourceQ2Params = SourceQ2Params()
    coherence_l: Optional[float] = None
    coherence_lp: Optional[float] = None
    signal_setting: SignalSetting = SignalSetting.H

    def __post_init__(self):
        if self.b1 < 0.0 or self.b2_mag < 0.0:
            raise ValueError("source amplitudes must be >= 0")
        norm = self.b1 * self.b1 + self.b2_mag * self.b2_mag
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"b1^2 + b2^2 must be 1, got {norm!r}")
        object.__setattr__(self, "t_h", complex(self.t_h))
        object.__setattr__(self, "t_v", complex(self.t_v))
        if abs(self.t_h) > 1.0 + 1e-12 or abs(self.t_v) > 1.0 + 1e-12:
            raise ValueError("|t_h| and |t_v| must be <= 1")
        if self.coherence_l is None:
            object.__setattr__(self, "coherence_l", self.idler.purity)
        if self.coherence_lp is None:
            object.__setattr__(self, "coherence_lp", self.idler.purity)
        if self.coherence_l < 0.0 or self.coherence_lp < 0.0:
            raise ValueError("coherence parameters must be >= 0")
        object.__setattr__(self, "signal_setting", SignalSetting(self.signal_setting))

    # -- convenience ----------------------------------------------------

    @classmethod
    def balanced(cls, idler: IdlerStateParams, *, t_h: complex = 1.0,
                 t_v: complex = 1.0, phi: float = 0.0,
                 setting: SignalSetting = SignalSetting.H,
                 theta: float = 0.0) -> "InterferometerConfig":
        """Second source pumped twice as hard, balanced reference weights."""
        return cls(b1=math.sqrt(1.0 / 3.0), b2_mag=math.sqrt(2.0 / 3.0),
                   phi=phi, t_h=t_h, t_v=t_v, idler=idler,
                   q2=SourceQ2Params(0.5, theta), signal_setting=setting)

    @property
    def is_balanced(self) -> bool:
        return (abs(self.b2_mag - math.sqrt(2.0) * self.b1) < 1e-9
                and abs(self.q2.p_h2 - 0.5) < 1e-12
                and self.q2.theta == 0.0)

    def with_phi(self, phi: float) -> "InterferometerConfig":
        return replace(self, phi=phi)

    def with_setting(self, setting: SignalSetting) -> "InterferometerConfig":
        return replace(self, signal_setting=setting)

    def with_idler(self, idler: IdlerStateParams) -> "InterferometerConfig":
        """Swap the prepared idler state; re-ties the coherences to its purity."""
        return replace(self, idler=idler, coherence_l=None, coherence_lp=None)

    @property
    def b2(self) -> complex:
        return self.b2_mag * cmath.exp(1j * self.phi)

    def to_json_dict(self) -> dict:
        return {
            "b1": self.b1,
            "b2_mag": self.b2_mag,
            "phi": self.phi,
            "t_h": {"re": self.t_h.real, "im": self.t_h.imag},
            "t_v": {"re": self.t_v.real, "im": self.t_v.imag},
            "idler": self.idler.to_json_dict(),
            "q2": self.q2.to_json_dict(),
            "coherence_l": self.coherence_l,
            "coherence_lp": self.coherence_lp,
            "signal_setting": self.signal_setting.value,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "InterferometerConfig":
        def _cplx(v):
            if isinstance(v, dict):
                return complex(float(v["re"]), float(v.get("im", 0.0)))
            return complex(v)
        return cls(
            b1=float(d["b1"]),
            b2_mag=float(d["b2_mag"]),
            phi=float(d.get("phi", 0.0)),
            t_h=_cplx(d.get("t_h", 1.0)),
            t_v=_cplx(d.get("t_v", 1.0)),
            idler=IdlerStateParams.from_json_dict(d["idler"]),
            q2=SourceQ2Params.from_json_dict(d.get("q2", {"p_h2": 0.5, "theta": 0.0})),
            coherence_l=d.get("coherence_l"),
            coherence_lp=d.get("coherence_lp"),
            signal_setting=SignalSetting(d.get("signal_setting", "H")),
        )


@dataclass(frozen=True)
class DetectionRates:
    """Per-pair click probabilities of the two polarization detectors."""

    rate_h: float
    rate_v: float

    def __post_init__(self):
        for name, r in (("rate_h", self.rate_h), ("rate_v", self.rate_v)):
            if not -1e-12 <= r <= 1.0 + 1e-12:
                raise ValueError(f"{name} out of [0,1]: {r}")


# ---------------------------------------------------------------------------
# raw builders (flat row-major lists; wrapped into DensityMatrix at the API)


def _total_state_raw(cfg: InterferometerConfig,
                     coherence_override: float | None = None) -> list[complex]:
    p_h = cfg.idler.p_h
    p_v = cfg.idler.p_v
    xi = cfg.idler.xi
    pur = cfg.idler.purity
    coh_l = cfg.coherence_l
    coh_lp = cfg.coherence_lp
    if coherence_override is not None:
        pur = coh_l = coh_lp = coherence_override
    p_h2 = cfg.q2.p_h2
    p_v2 = cfg.q2.p_v2
    theta = cfg.q2.theta
    b1 = cfg.b1
    b2 = cfg.b2
    w1 = b1 * b1
    w2 = cfg.b2_mag * cfg.b2_mag
    cross = b1 * b2.conjugate()

    r = [0j] * 64
    # source-1 block: rows (0,1) for setting H, rows (2,3) for setting V
    o = 0 if cfg.signal_setting is SignalSetting.H else 2
    r[o * 8 + o] = complex(w1 * p_h)
    r[o * 8 + o + 1] = w1 * pur * math.sqrt(p_h * p_v) * cmath.exp(-1j * xi)
    r[(o + 1) * 8 + o + 1] = complex(w1 * p_v)
    # source-2 block
    r[4 * 8 + 4] = complex(w2 * p_h2)
    r[4 * 8 + 7] = w2 * math.sqrt(p_h2 * p_v2) * cmath.exp(-1j * theta)
    r[7 * 8 + 7] = complex(w2 * p_v2)
    # cross terms between the sources
    r[o * 8 + 4] = cross * math.sqrt(p_h * p_h2)
    r[o * 8 + 7] = cross * math.sqrt(p_h * p_v2) * cmath.exp(-1j * theta)
    r[(o + 1) * 8 + 4] = cross * coh_l * math.sqrt(p_v * p_h2) * cmath.exp(1j * xi)
    r[(o + 1) * 8 + 7] = (cross * coh_lp * math.sqrt(p_v * p_v2)
                          * cmath.exp(1j * (xi - theta)))
    # fill the Hermitian conjugates
    for i in range(8):
        for j in range(i + 1, 8):
            r[j * 8 + i] = r[i * 8 + j].conjugate()
    return r


def _alignment_isometry_raw(cfg: InterferometerConfig) -> list[complex]:
    """12x8 isometry: b' idler modes split into (b, w), b modes untouched."""
    r_h = math.sqrt(max(0.0, 1.0 - abs(cfg.t_h) ** 2))
    r_v = math.sqrt(max(0.0, 1.0 - abs(cfg.t_v) ** 2))
    k = [0j] * (12 * 8)
    for s in range(2):  # signal H_Sa / V_Sa
        k[(s * 4 + 0) * 8 + (s * 2 + 0)] = cfg.t_h   # H_Ib' -> H_Ib
        k[(s * 4 + 2) * 8 + (s * 2 + 0)] = complex(r_h)  # H_Ib' -> H_Iw
        k[(s * 4 + 1) * 8 + (s * 2 + 1)] = cfg.t_v   # V_Ib' -> V_Ib
        k[(s * 4 + 3) * 8 + (s * 2 + 1)] = complex(r_v)  # V_Ib' -> V_Iw
    for s in range(2):  # source-2 sector passes through
        for p in range(2):
            k[(8 + s * 2 + p) * 8 + (4 + s * 2 + p)] = 1.0 + 0j
    return k


def _apply_alignment_raw(r8: list[complex], cfg: InterferometerConfig) -> list[complex]:
    k = _alignment_isometry_raw(cfg)
    kd = _k.mat_dagger(k, 12, 8)
    tmp = _k.mat_mul(k, 12, 8, r8, 8, 8)
    return _k.mat_mul(tmp, 12, 8, kd, 8, 12)


def _signal_marginal_raw(r12: list[complex]) -> list[complex]:
    """Trace the idler out of the 12-dim aligned state.

    The 12-dim space is a direct sum, not a full tensor product: the
    source-1 signal modes pair with four idler modes (b and w, both
    polarizations), the source-2 signal modes with the two b modes.
    Off-diagonal signal blocks therefore sum over the shared b modes
    only, which is exactly where the induced coherence lives.
    """
    rs = [0j] * 16
    for s in range(2):
        for sp in range(2):
            acc = 0j
            for i in range(4):
                acc += r12[(s * 4 + i) * 12 + (sp * 4 + i)]
            rs[s * 4 + sp] = acc
            acc = 0j
            for i in range(2):
                acc += r12[(s * 4 + i) * 12 + (8 + sp * 2 + i)]
            rs[s * 4 + (2 + sp)] = acc
            acc = 0j
            for i in range(2):
                acc += r12[(8 + s * 2 + i) * 12 + (sp * 4 + i)]
            rs[(2 + s) * 4 + sp] = acc
            acc = 0j
            for i in range(2):
                acc += r12[(8 + s * 2 + i) * 12 + (8 + sp * 2 + i)]
            rs[(2 + s) * 4 + (2 + sp)] = acc
    return rs


def _recombine_raw(rs: list[complex]) -> list[complex]:
    bsd = _k.mat_dagger(_BS_RAW, 4, 4)
    tmp = _k.mat_mul(_BS_RAW, 4, 4, rs, 4, 4)
    return _k.mat_mul(tmp, 4, 4, bsd, 4, 4)


# ---------------------------------------------------------------------------
# public operations


def total_state(cfg: InterferometerConfig) -> DensityMatrix:
    """Joint 8-dim two-photon state of the coherently pumped source pair."""
    return DensityMatrix(8, ComplexMatrix(8, 8, tuple(_total_state_raw(cfg))), BASIS_8)


def coherence_stressed_state(cfg: InterferometerConfig,
                             coherence: float) -> DensityMatrix:
    """Joint state with every coherence slot forced to ``coherence``.

    Overrides the idler purity and both cross-source coherences at once,
    which is the one-parameter family whose positivity boundary sits at
    coherence = 1; values above it make the matrix indefinite.  Meant
    for positivity studies, not for simulation.
    """
    raw = _total_state_raw(cfg, coherence_override=coherence)
    return DensityMatrix(8, ComplexMatrix(8, 8, tuple(raw)), BASIS_8)


def alignment_isometry(cfg: InterferometerConfig) -> ComplexMatrix:
    """The 12x8 idler-alignment isometry (K^dagger K = identity)."""
    return ComplexMatrix(12, 8, tuple(_alignment_isometry_raw(cfg)))


def apply_alignment(rho: DensityMatrix, cfg: InterferometerConfig) -> DensityMatrix:
    """Push an 8-dim joint state through the idler alignment step."""
    if rho.dim != 8 or rho.basis_labels != BASIS_8:
        raise ValueError("expected an 8-dim state in the source-pair basis")
    out = _apply_alignment_raw(list(rho.matrix.entries), cfg)
    return DensityMatrix(12, ComplexMatrix(12, 12, tuple(out)), BASIS_12)


def trace_out_idler(rho12: DensityMatrix) -> DensityMatrix:
    """Signal marginal of the aligned 12-dim state."""
    if rho12.dim != 12 or rho12.basis_labels != BASIS_12:
        raise ValueError("expected a 12-dim aligned state")
    rs = _signal_marginal_raw(list(rho12.matrix.entries))
    return DensityMatrix(4, ComplexMatrix(4, 4, tuple(rs)), SIGNAL_BASIS)


def signal_reduced_state(cfg: InterferometerConfig) -> DensityMatrix:
    """Signal marginal after alignment, built directly in closed form.

    Agrees with the exact chain total_state -> apply_alignment ->
    trace_out_idler to float precision; the fringing coherences sit in
    the row selected by the signal setting.
    """
    b1 = cfg.b1
    b2 = cfg.b2
    w1 = b1 * b1
    w2 = cfg.b2_mag * cfg.b2_mag
    cross = b1 * b2.conjugate()
    idler = cfg.idler
    q2 = cfg.q2
    rho12 = cfg.t_h * cross * math.sqrt(idler.p_h * q2.p_h2)
    rho14 = (cfg.t_v * cross * cfg.coherence_lp
             * math.sqrt(idler.p_v * q2.p_v2)
             * cmath.exp(1j * (idler.xi - q2.theta)))
    o = 0 if cfg.signal_setting is SignalSetting.H else 1
    rs = [0j] * 16
    rs[o * 4 + o] = complex(w1)
    rs[o * 4 + 2] = rho12
    rs[o * 4 + 3] = rho14
    rs[2 * 4 + o] = rho12.conjugate()
    rs[3 * 4 + o] = rho14.conjugate()
    rs[2 * 4 + 2] = complex(w2 * q2.p_h2)
    rs[3 * 4 + 3] = complex(w2 * q2.p_v2)
    return DensityMatrix(4, ComplexMatrix(4, 4, tuple(rs)), SIGNAL_BASIS)


def recombiner_matrix() -> ComplexMatrix:
    """Unitary of the recombining splitter in the signal basis."""
    return ComplexMatrix(4, 4, tuple(_BS_RAW))


def recombine(rho_s: DensityMatrix) -> DensityMatrix:
    """Superpose the two signal paths on the balanced splitter."""
    if rho_s.dim != 4:
        raise ValueError("expected the 4-dim signal state")
    out = _recombine_raw(list(rho_s.matrix.entries))
    return DensityMatrix(4, ComplexMatrix(4, 4, tuple(out)), OUTPUT_BASIS)


def rates_exact(cfg: InterferometerConfig) -> DetectionRates:
    """Detection rates from the full matrix evolution (the oracle path)."""
    r8 = _total_state_raw(cfg)
    r12 = _apply_alignment_raw(r8, cfg)
    rs = _signal_marginal_raw(r12)
    out = _recombine_raw(rs)
    return DetectionRates(out[0].real, out[5].real)


def rates_closed_form(cfg: InterferometerConfig) -> DetectionRates:
    """Detection rates from the closed-form fringe formulas."""
    w1 = cfg.b1 * cfg.b1
    w2 = cfg.b2_mag * cfg.b2_mag
    amp = 2.0 * cfg.b1 * cfg.b2_mag
    idler = cfg.idler
    q2 = cfg.q2
    if cfg.signal_setting is SignalSetting.H:
        rate_h = 0.5 * (w1 + w2 * q2.p_h2
                        + amp * abs(cfg.t_h) * math.sqrt(idler.p_h * q2.p_h2)
                        * math.cos(cfg.phi - cmath.phase(cfg.t_h)))
        rate_v = 0.5 * w2 * q2.p_v2
    else:
        rate_h = 0.5 * w2 * q2.p_h2
        rate_v = 0.5 * (w1 + w2 * q2.p_v2
                        + amp * idler.purity * abs(cfg.t_v)
                        * math.sqrt(idler.p_v * q2.p_v2)
                        * math.cos(cfg.phi + q2.theta - idler.xi
                                   - cmath.phase(cfg.t_v)))
    return DetectionRates(rate_h, rate_v)


def visibilities_closed_form(cfg: InterferometerConfig) -> tuple[float, float]:
    """Fringe visibilities of the two settings as phi is scanned."""
    w1 = cfg.b1 * cfg.b1
    w2 = cfg.b2_mag * cfg.b2_mag
    amp = 2.0 * cfg.b1 * cfg.b2_mag
    idler = cfg.idler
    q2 = cfg.q2
    v_h = (amp * abs(cfg.t_h) * math.sqrt(idler.p_h * q2.p_h2)
           / (w1 + w2 * q2.p_h2))
    v_v = (amp * idler.purity * abs(cfg.t_v) * math.sqrt(idler.p_v * q2.p_v2)
           / (w1 + w2 * q2.p_v2))
    return v_h, v_v


def post_interaction_idler(cfg: InterferometerConfig) -> DensityMatrix:
    """Idler state after its path has been aligned with the reference.

    Defined for a pure prepared idler only: an even mixture of the
    prepared state and the maximally mixed state.
    """
    if cfg.idler.purity < 1.0 - 1e-12:
        raise ValueError("post-interaction state is defined for a pure idler")
    x, y = cfg.idler.state_vector()
    m = ComplexMatrix(2, 2, (
        0.5 * (x * x.conjugate()) + 0.25,
        0.5 * (x * y.conjugate()),
        0.5 * (y * x.conjugate()),
        0.5 * (y * y.conjugate()) + 0.25,
    ))
    return DensityMatrix(2, m, ("H_I", "V_I"))


def random_valid_config(rng, *, purity: float | None = None,
                        setting: SignalSetting | None = None,
                        complex_t: bool = True) -> InterferometerConfig:
    """Sample a physically valid configuration (used by property sweeps)."""
    w1 = 0.02 + 0.96 * rng.random()
    b1 = math.sqrt(w1)
    b2_mag = math.sqrt(1.0 - w1)
    pur = rng.random() if purity is None else purity
    idler = IdlerStateParams(rng.random(), 2.0 * math.pi * rng.random(), pur)
    q2 = SourceQ2Params(rng.random(), 2.0 * math.pi * rng.random())
    t_h = rng.random()
    t_v = rng.random()
    if complex_t:
        t_h *= cmath.exp(2j * math.pi * rng.random())
        t_v *= cmath.exp(2j * math.pi * rng.random())
    if setting is None:
        setting = SignalSetting.H if rng.random() < 0.5 else SignalSetting.V
    return InterferometerConfig(
        b1=b1, b2_mag=b2_mag, phi=2.0 * math.pi * rng.random(),
        t_h=t_h, t_v=t_v, idler=idler, q2=q2, signal_setting=setting)
