"""Multi-pass cavity protocol: grow cyclic cat states one atom at a time.

A first ladder-configuration atom turns a Fock state |nu0> into a
two-component superposition (nu0-2, nu0).  Each later atom, sent through
with a tuned time of flight, swallows two more photons from the lower
component while returning the upper one intact, stretching the photon gap
and with it the cyclic order of the field.

Exit bookkeeping: while the atom is inside, the honest reduced field is
generally mixed (the surviving components ride on different atomic
levels).  The pass reports carry those honest probabilities and the
honest entropy trace; the *resulting field* handed to the next pass is
the read-off superposition built from the two target components, which is
the standard idealization of the atom being discarded after its exit.
theta and xi of that superposition are read off the exit amplitudes, not
imposed.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from .analytic_core import switching_time
from .dynamics import (
    CouplingSchedule,
    SystemState,
    Trajectory,
    ground_product_state,
    integrate,
)
from .errors import (
    MinimumNotFoundError,
    NonPureFieldError,
    TargetUnreachableError,
    ValidationError,
)
from .hilbert import AtomicConfig, Kind, build_sector_basis
from .observables import (
    FieldDensityMatrix,
    SymmetryReport,
    detect_cyclic_symmetry,
    linear_entropy,
    photon_probabilities,
    reduce_field,
)

__all__ = [
    "PassSpec",
    "ProtocolSpec",
    "PassageReport",
    "TofSearchResult",
    "CatReference",
    "REFERENCE_CATS",
    "reference_config",
    "first_passage",
    "subsequent_passage",
    "find_tof_for_cat",
    "run_protocol",
]

EXIT_THRESHOLD = 1e-3        # max acceptable P(nu0-1) at the first exit
SEARCH_HALF_WIDTH = 0.75     # exit-time window around the predicted instant
GRID_STEP = 0.01
GOLDEN_TOL = 1e-6
PURITY_TOL = 1e-6
DEFAULT_LEAKAGE_TARGET = 0.02
SCAN_STEP = 0.05
SCAN_TOL = 1e-9              # integration tolerance during t_tof scans


class TofSearchResult(NamedTuple):
    t_tof: float
    leakage: float


class CatReference(NamedTuple):
    m1: int
    m2: int
    t_tof: float


# bundled operating points for the two-Fock cat preparation
# (initial components, time of flight), all for the reference couplings
REFERENCE_CATS = (
    CatReference(1, 3, 5.749),
    CatReference(3, 5, 4.510),
    CatReference(1, 5, 2.685),
)


def reference_config() -> AtomicConfig:
    """Resonant ladder configuration with mu12 = 1, mu23 = sqrt(2)."""
    return AtomicConfig(kind=Kind.XI, mu12=1.0, mu23=math.sqrt(2.0))


@dataclass(frozen=True)
class PassSpec:
    schedule: CouplingSchedule
    exit_policy: str = "fixed"   # "fixed" | "search"
    na: int = 1

    def __post_init__(self):
        if self.exit_policy not in ("fixed", "search"):
            raise ValidationError(f"unknown exit policy {self.exit_policy!r}")
        if self.na < 1:
            raise ValidationError("need at least one atom per pass")


@dataclass(frozen=True)
class ProtocolSpec:
    config: AtomicConfig
    nu0: int
    passes: Tuple[PassSpec, ...] = ()
    theta: Optional[float] = None   # override the read-off superposition
    xi: Optional[float] = None      # parameters of the first exit, if set


@dataclass(frozen=True)
class PassageReport:
    """What one atom did to the cavity field."""

    exit_time: float
    probabilities: np.ndarray          # honest P(nu) at exit
    times: np.ndarray                  # entropy-trace time grid
    entropies: np.ndarray              # honest S_L(t) while the atom is inside
    field: FieldDensityMatrix          # read-off field handed to the next pass
    symmetry: SymmetryReport
    min_probability: Optional[float] = None   # first pass: achieved P(nu0-1)
    leakage: Optional[float] = None           # later passes: off-target weight
    theta: Optional[float] = None             # read-off cat parameters
    xi: Optional[float] = None


# ------------------------------------------------------------------
# helpers
# ------------------------------------------------------------------

def _golden_min(f, a: float, b: float, tol: float) -> Tuple[float, float]:
    """Golden-section minimum of a unimodal f on [a, b]."""
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv * (b - a)
    x2 = a + inv * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _entropy_trace(traj: Trajectory) -> np.ndarray:
    return np.array(
        [linear_entropy(reduce_field(s)) for s in traj.snapshots]
    )


def _pure_amplitudes(field: FieldDensityMatrix) -> np.ndarray:
    """Fock amplitudes of a pure field state, global phase fixed."""
    s_l = linear_entropy(field)
    if s_l > PURITY_TOL:
        raise NonPureFieldError(
            f"protocol needs a pure cavity field, got S_L = {s_l:.3g}"
        )
    w, v = np.linalg.eigh(field.rho)
    c = v[:, -1]
    for x in c:
        if abs(x) > 1e-12:
            c = c * np.exp(-1j * np.angle(x))
            break
    return c


def _field_from_components(components: Dict[int, complex]) -> FieldDensityMatrix:
    nu_max = max(components)
    vec = np.zeros(nu_max + 1, dtype=complex)
    for nu, amp in components.items():
        vec[nu] = amp
    vec /= np.linalg.norm(vec)
    return FieldDensityMatrix(rho=np.outer(vec, vec.conj()))


def _read_off(components: Dict[int, complex]) -> Tuple[
    FieldDensityMatrix, Optional[float], Optional[float]
]:
    """Read-off field plus (theta, xi) when it has exactly two components."""
    field = _field_from_components(components)
    theta = xi = None
    nonzero = sorted(nu for nu, a in components.items() if abs(a) > 1e-12)
    if len(nonzero) == 2:
        lo, hi = nonzero
        c_lo, c_hi = components[lo], components[hi]
        theta = math.atan2(abs(c_hi), abs(c_lo))
        xi = float(np.angle(c_hi) - np.angle(c_lo))
    return field, theta, xi


def _state_from_field(
    field: FieldDensityMatrix, config: AtomicConfig, na: int
) -> SystemState:
    """Pure field ⊗ all atoms ground, one sector per Fock component."""
    c = _pure_amplitudes(field)
    sectors = {}
    for nu in range(c.size):
        if abs(c[nu]) > 1e-12:
            basis = build_sector_basis(config, na, nu)
            amps = np.zeros(len(basis), dtype=complex)
            amps[basis.index(na, na)] = c[nu]
            sectors[nu] = (basis, amps)
    if not sectors:
        raise ValidationError("field state has no Fock support")
    return SystemState(sectors=sectors)


# ------------------------------------------------------------------
# passes
# ------------------------------------------------------------------

def first_passage(
    nu0: int, config: AtomicConfig, schedule: CouplingSchedule
) -> PassageReport:
    """Send one ground-state ladder atom through |nu0>.

    The exit time is placed at the local minimum of P(nu0 - 1): a coarse
    0.01 grid around the predicted instant (the switching time, delayed by
    the ramp area 1/2 for the bump envelope) followed by golden-section
    refinement.  Raises MinimumNotFoundError when the minimum never drops
    below EXIT_THRESHOLD.
    """
    if config.kind is not Kind.XI:
        raise ValidationError("the first passage needs a ladder configuration")
    if nu0 < 2:
        raise ValidationError(f"need nu0 >= 2, got {nu0}")
    if nu0 == 2:
        warnings.warn(
            "nu0 = 2 empties the cavity's lower component", stacklevel=2
        )

    t_s = switching_time(config, nu0)
    center = t_s + 0.5 if schedule.mode == "bump" else t_s
    lo = max(center - SEARCH_HALF_WIDTH, GRID_STEP)
    hi = center + SEARCH_HALF_WIDTH
    if schedule.mode == "bump":
        hi = min(hi, schedule.t_tof)
    if hi <= lo:
        raise ValidationError("empty exit-time search window")

    initial = ground_product_state(config, nu0, na=1)
    basis = initial.sectors[nu0][0]
    idx_mid = basis.index(1, 0)          # the nu0 - 1 component

    def p_mid_at(t: float) -> float:
        traj = integrate(initial, config, schedule, t, n_snapshots=2)
        _, amps = traj.snapshots[-1].sectors[nu0]
        return float(abs(amps[idx_mid]) ** 2)

    grid = np.arange(lo, hi + GRID_STEP / 2, GRID_STEP)
    traj = integrate(
        initial, config, schedule, float(grid[-1]),
        snapshot_times=grid, n_snapshots=2,
    )
    p_grid = []
    for t in grid:
        _, amps = traj.state_at(float(t)).sectors[nu0]
        p_grid.append(float(abs(amps[idx_mid]) ** 2))
    k = int(np.argmin(p_grid))
    a = float(grid[max(k - 1, 0)])
    b = float(grid[min(k + 1, len(grid) - 1)])
    t_exit, p_min = _golden_min(p_mid_at, a, b, GOLDEN_TOL)
    if p_min > EXIT_THRESHOLD:
        raise MinimumNotFoundError(
            f"P({nu0 - 1}) only reaches {p_min:.3g} in [{lo:.3f}, {hi:.3f}]"
        )

    final = integrate(initial, config, schedule, t_exit)
    exit_state = final.snapshots[-1]
    probs = photon_probabilities(reduce_field(exit_state))
    _, amps = exit_state.sectors[nu0]
    components = {
        nu0 - 2: complex(amps[basis.index(0, 0)]),
        nu0: complex(amps[basis.index(1, 1)]),
    }
    out_field, theta, xi = _read_off(components)
    return PassageReport(
        exit_time=t_exit,
        probabilities=probs,
        times=final.times,
        entropies=_entropy_trace(final),
        field=out_field,
        symmetry=detect_cyclic_symmetry(out_field),
        min_probability=p_min,
        theta=theta,
        xi=xi,
    )


def _sector_targets(state: SystemState) -> Dict[int, int]:
    """Read-off basis index per sector: drain the lowest, keep the rest."""
    ms = sorted(state.sectors)
    targets = {}
    for m in ms:
        basis, _ = state.sectors[m]
        if m == ms[0] and len(ms) > 1:
            targets[m] = int(np.argmin([s.nu for s in basis.states]))
        else:
            targets[m] = basis.index(basis.na, basis.na)   # atoms back in ground
    return targets


def _exit_components(
    state: SystemState, targets: Dict[int, int]
) -> Dict[int, complex]:
    """Photon amplitude carried by each sector's target basis state."""
    components = {}
    for m, (basis, amps) in state.sectors.items():
        i = targets[m]
        components[basis.states[i].nu] = complex(amps[i])
    return components


def subsequent_passage(
    field: FieldDensityMatrix,
    config: AtomicConfig,
    t_tof: float,
    na: int = 1,
    tol: float = 1e-11,
) -> PassageReport:
    """Send a fresh ground-state atom (or na of them) through a pure field.

    The field-atom product evolves under the bump envelope for the full
    time of flight.  Raises NonPureFieldError for mixed inputs.
    """
    if t_tof <= 0:
        raise ValidationError(f"need t_tof > 0, got {t_tof}")
    state = _state_from_field(field, config, na)
    schedule = CouplingSchedule(mode="bump", t_tof=t_tof)
    traj = integrate(state, config, schedule, t_tof, tol=tol)
    exit_state = traj.snapshots[-1]
    probs = photon_probabilities(reduce_field(exit_state))

    targets = _sector_targets(exit_state)
    components = _exit_components(exit_state, targets)
    out_field, theta, xi = _read_off(components)
    leak = float(1.0 - sum(probs[nu] for nu in set(components)))
    return PassageReport(
        exit_time=t_tof,
        probabilities=probs,
        times=traj.times,
        entropies=_entropy_trace(traj),
        field=out_field,
        symmetry=detect_cyclic_symmetry(out_field),
        leakage=leak,
        theta=theta,
        xi=xi,
    )


# ------------------------------------------------------------------
# time-of-flight search
# ------------------------------------------------------------------

def find_tof_for_cat(
    field: FieldDensityMatrix,
    config: AtomicConfig,
    target: float = DEFAULT_LEAKAGE_TARGET,
    window: Optional[Tuple[float, float]] = None,
    na: int = 1,
    workers: Optional[int] = None,
) -> TofSearchResult:
    """Tune the time of flight so one pass leaves a clean two-Fock cat.

    Scans the window (default [1, 20]) on a 0.05 grid for the time of
    flight minimizing the population outside the two target photon
    numbers (drained lower component, preserved upper), then refines by
    golden section.  Raises TargetUnreachableError (with the best point
    attached) if the achieved leakage stays above ``target``.
    """
    c = _pure_amplitudes(field)
    support = [nu for nu in range(c.size) if abs(c[nu]) > 1e-12]
    if len(support) != 2:
        raise ValidationError(
            f"need a two-component field, got support {support}"
        )
    m1, m2 = support
    basis1 = build_sector_basis(config, na, m1)
    nu_lo = min(s.nu for s in basis1.states)
    state = _state_from_field(field, config, na)

    def leakage_at(t: float) -> float:
        schedule = CouplingSchedule(mode="bump", t_tof=t)
        traj = integrate(state, config, schedule, t, tol=SCAN_TOL, n_snapshots=4)
        probs = photon_probabilities(reduce_field(traj.snapshots[-1]))
        return float(1.0 - probs[nu_lo] - probs[m2])

    w0, w1 = window if window is not None else (1.0, 20.0)
    if not 0 < w0 < w1:
        raise ValidationError(f"bad search window ({w0}, {w1})")
    candidates = np.arange(w0, w1 + SCAN_STEP / 2, SCAN_STEP)

    if workers is None:
        workers = int(os.environ.get("CNLIGHT_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            leaks = list(pool.map(leakage_at, candidates))
    else:
        leaks = [leakage_at(float(t)) for t in candidates]

    k = int(np.argmin(leaks))
    a = float(candidates[max(k - 1, 0)])
    b = float(candidates[min(k + 1, len(candidates) - 1)])
    t_best, leak_best = _golden_min(leakage_at, a, b, 1e-5)
    if leaks[k] < leak_best:
        t_best, leak_best = float(candidates[k]), float(leaks[k])
    if leak_best > target:
        raise TargetUnreachableError(
            f"best leakage {leak_best:.4g} at t_tof = {t_best:.4f} "
            f"misses the target {target}",
            best_value=t_best,
            best_objective=leak_best,
        )
    return TofSearchResult(t_tof=t_best, leakage=leak_best)


# ------------------------------------------------------------------
# protocol driver
# ------------------------------------------------------------------

def _initial_report(config: AtomicConfig, nu0: int) -> PassageReport:
    rho = np.zeros((nu0 + 1, nu0 + 1), dtype=complex)
    rho[nu0, nu0] = 1.0
    fdm = FieldDensityMatrix(rho=rho)
    return PassageReport(
        exit_time=0.0,
        probabilities=photon_probabilities(fdm),
        times=np.array([0.0]),
        entropies=np.array([0.0]),
        field=fdm,
        symmetry=detect_cyclic_symmetry(fdm),
    )


def run_protocol(spec: ProtocolSpec) -> List[PassageReport]:
    """Chain passes; each read-off exit field feeds the next atom."""
    if spec.nu0 < 0:
        raise ValidationError("photon numbers are non-negative")
    if not spec.passes:
        return [_initial_report(spec.config, spec.nu0)]

    reports: List[PassageReport] = []
    field: Optional[FieldDensityMatrix] = None
    for i, ps in enumerate(spec.passes):
        if i == 0:
            rep = first_passage(spec.nu0, spec.config, ps.schedule)
            if spec.theta is not None:
                xi = spec.xi if spec.xi is not None else 0.0
                lo, hi = spec.nu0 - 2, spec.nu0
                forced = {
                    lo: complex(math.cos(spec.theta)),
                    hi: math.sin(spec.theta) * np.exp(1j * xi),
                }
                fld, th, x = _read_off(forced)
                rep = PassageReport(
                    exit_time=rep.exit_time,
                    probabilities=rep.probabilities,
                    times=rep.times,
                    entropies=rep.entropies,
                    field=fld,
                    symmetry=detect_cyclic_symmetry(fld),
                    min_probability=rep.min_probability,
                    theta=th,
                    xi=x,
                )
        else:
            if ps.exit_policy == "search":
                ref = ps.schedule.t_tof
                window = (
                    (0.85 * ref, 1.15 * ref) if ref > 0 else None
                )
                found = find_tof_for_cat(
                    field, spec.config, window=window, na=ps.na
                )
                t_tof = found.t_tof
            else:
                t_tof = ps.schedule.t_tof
            rep = subsequent_passage(field, spec.config, t_tof, na=ps.na)
        field = rep.field
        reports.append(rep)
    return reports
