"""End-to-end decoding, Monte Carlo sampling and threshold estimation.

A decoding problem bundles a code (or detector error model) with its noise
so that the harness can build per-syndrome networks, draw error samples,
and score the decoder.  Contraction engines are chosen per configuration:
exact for coordinate-free networks, boundary MPS for planar ones, the 3D
layer sweep for cubic ones.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .approx import mps_contract_2d, sweep_contract_3d
from .builders import (
    DecodingNetwork,
    build_css_sector_network,
    build_detector_cubic_network,
    build_detector_network,
    build_generator_network,
    css_sector_parts,
)
from .codes import CssCode
from .noise import QubitNoise, depolarizing
from .pauli import PauliOperator, Tableau, decompose, syndrome_of
from .tensornet import ContractionValue


@dataclass(frozen=True)
class ContractionConfig:
    """Engine and bond-dimension settings for one decoding run."""

    engine: str = "auto"  # auto | exact | mps | sweep
    chi_peps: int = 24
    chi_split: int = 8
    chi_mps: int = 32
    cutoff: float = 1e-14
    reverse: bool = False


@dataclass
class DecodeResult:
    class_values: list
    chosen_class: int
    diagnostics: dict = field(default_factory=dict)


@dataclass
class ExperimentRecord:
    problem_id: str
    p: float
    d: int
    shots: int
    failures: int
    seed: int
    config: ContractionConfig
    wall_time: float

    @property
    def rate(self) -> float:
        return self.failures / self.shots

    @property
    def stderr(self) -> float:
        r = self.rate
        return math.sqrt(r * (1 - r) / self.shots)


def _contractor(net_probe, config: ContractionConfig):
    """Pick the contraction callable for networks shaped like net_probe."""
    engine = config.engine
    if engine == "auto":
        dims = {
            len(net_probe.coords.get(tid, ()))
            for tid in net_probe.tensors
        }
        if dims == {3}:
            engine = "sweep"
        elif dims == {2}:
            engine = "mps"
        else:
            engine = "exact"
    if engine == "exact":
        return lambda net: net.contract_exact()
    if engine == "mps":
        return lambda net: mps_contract_2d(net, config.chi_mps, config.cutoff)
    if engine == "sweep":
        return lambda net: sweep_contract_3d(
            net, config.chi_peps, config.chi_split, config.chi_mps,
            config.cutoff, config.reverse,
        )
    raise ValueError(f"unknown engine {config.engine!r}")


def _argmax_class(values) -> int:
    """Index of the largest class value; ties go to the identity class,
    then the lowest index."""
    best = 0
    for i in range(1, len(values)):
        a, b = values[i], values[best]
        if a.mantissa == 0.0:
            if b.mantissa < 0.0:
                best = i
            continue
        if b.mantissa == 0.0:
            if a.mantissa > 0.0:
                best = i
            continue
        if (a.mantissa > 0.0) != (b.mantissa > 0.0):
            if a.mantissa > 0.0:
                best = i
            continue
        # same sign: compare log magnitudes, sign decides the direction
        if (a.log_abs > b.log_abs) == (a.mantissa > 0.0) and a.log_abs != b.log_abs:
            best = i
    return best


class StabilizerProblem:
    """General stabilizer code under independent per-qubit Pauli noise."""

    def __init__(self, tableau: Tableau, noise: list, picture: str = "detector"):
        self.tableau = tableau
        self.noise = list(noise)
        self.picture = picture
        self.n_classes = 4 ** tableau.k
        self.problem_id = f"stabilizer-n{tableau.n}-k{tableau.k}-{picture}"

    def network(self, m, ports="batch") -> DecodingNetwork:
        build = (
            build_detector_network
            if self.picture == "detector"
            else build_generator_network
        )
        return build(self.tableau, self.noise, m, ports)

    def sample(self, rng):
        n, k = self.tableau.n, self.tableau.k
        x = np.zeros(n, dtype=np.uint8)
        z = np.zeros(n, dtype=np.uint8)
        for q in range(n):
            xq, zq = self.noise[q].sample(rng, 1)
            x[q], z[q] = xq[0], zq[0]
        err = PauliOperator(x, z)
        m = syndrome_of(err, self.tableau)
        dec = decompose(err, self.tableau)
        cls = 0
        for j in range(k):
            cls = (cls << 1) | int(dec.logical_b[j])
        for j in range(k):
            cls = (cls << 1) | int(dec.logical_a[j])
        return cls, m


class CssSectorProblem:
    """Single-sector flip decoding of a CSS code (2D or 3D lattice)."""

    def __init__(
        self,
        code: CssCode,
        sector: str,
        p: float,
        picture: str = "detector",
        ports: str = "batch",
    ):
        self.code = code
        self.sector = sector
        self.p = p
        self.picture = picture
        self.ports = ports
        h, g, err_log, con_log, hc, gc = css_sector_parts(code, sector)
        self.h = h
        self.con_log = con_log
        self.n_classes = 2
        self.problem_id = f"css-{sector}-n{code.n}-{picture}"

    def network(self, m, ports=None) -> DecodingNetwork:
        return build_css_sector_network(
            self.code, self.sector, self.picture, self.p, m,
            self.ports if ports is None else ports,
        )

    def sample(self, rng):
        e = (rng.random(self.code.n) < self.p).astype(np.uint8)
        m = (self.h @ e) % 2
        cls = int(e @ self.con_log) % 2
        return cls, m


class CubicDepolarizingProblem:
    """Depolarizing noise on a 3D CSS code, detector picture, cubic layout."""

    def __init__(self, code: CssCode, p: float):
        self.code = code
        self.p = p
        self.noise = [depolarizing(p)] * code.n
        self.lx = code.logicals_x[0].x_bits
        self.lz = code.logicals_z[0].z_bits
        self.n_classes = 4
        self.problem_id = f"depolarizing-n{code.n}-detector"

    def network(self, m, ports="batch") -> DecodingNetwork:
        return build_detector_cubic_network(self.code, self.noise, m, ports)

    def sample(self, rng):
        x, z = self.noise[0].sample(rng, self.code.n)
        m = np.concatenate([self.code.h_x @ z % 2, self.code.h_z @ x % 2])
        m = m.astype(np.uint8)
        b = int(z @ self.lx) % 2
        a = int(x @ self.lz) % 2
        return 2 * b + a, m


class DemProblem:
    """Decoding a detector error model's observable from detector outcomes."""

    def __init__(self, model, network_builder=None):
        from .builders import build_dem_network

        self.model = model
        self._builder = network_builder or build_dem_network
        self.n_classes = 2 ** model.n_logicals
        self.probs = np.array([mech.p for mech in model.mechanisms])
        self.h = model.check_matrix()
        self.l = model.logical_matrix()
        self.base_m = np.zeros(model.n_detectors, dtype=np.uint8)
        for det in model.baseline_flips:
            self.base_m[det] = 1
        self.base_l = 0
        for o in model.baseline_logicals:
            self.base_l |= 1 << (model.n_logicals - 1 - o)
        self.problem_id = f"dem-{model.n_detectors}d-{model.n_mechanisms}m"

    def network(self, m, ports="batch") -> DecodingNetwork:
        return self._builder(self.model, m, ports)

    def sample(self, rng):
        fired = (rng.random(len(self.probs)) < self.probs).astype(np.uint8)
        m = ((self.h @ fired) % 2 ^ self.base_m).astype(np.uint8)
        bits = (self.l @ fired) % 2
        cls = 0
        for b in bits:
            cls = (cls << 1) | int(b)
        return cls ^ self.base_l, m


def decode(problem, m, config: ContractionConfig = ContractionConfig()) -> DecodeResult:
    """Full maximum-likelihood decode: all class values, argmax class."""
    dn = problem.network(m)
    nets = dn.networks()
    contract = _contractor(nets[0], config)
    values = dn.class_values(contract=contract)
    chosen = _argmax_class(values)
    logs = [v.log_scale for v in values if v.mantissa != 0.0]
    diag = {
        "picture": dn.picture,
        "log_scale_range": (min(logs), max(logs)) if logs else (0.0, 0.0),
    }
    return DecodeResult(values, chosen, diag)


def _decide(problem, m, config: ContractionConfig) -> int:
    """Chosen class only, skipping contractions that cannot change the
    argmax: with one logical port the sign of the t=1 setting decides; with
    two ports the all-plus setting is common to every pairwise difference
    and is skipped."""
    dn = problem.network(m)
    if dn.transform != "wht" or dn.n_ports not in (1, 2):
        nets = dn.networks()
        contract = _contractor(nets[0], config)
        vals = [contract(net) for net in nets]
        if dn.transform == "direct":
            ordered = [vals[i ^ dn.class_xor] for i in range(len(vals))]
            return _argmax_class(ordered)
        return decode(problem, m, config).chosen_class
    nets = dn.networks()
    contract = _contractor(nets[0], config)
    if dn.n_ports == 1:
        f1 = contract(nets[1])
        chosen = 0 if f1.mantissa >= 0.0 else 1
        return chosen ^ dn.class_xor
    # two ports: scores s_c = sum_{t != 0} (-1)^{c.t} f_t rank the classes
    fs = [contract(nets[t]) for t in (1, 2, 3)]
    ref = max(v.log_abs for v in fs)
    if ref == -math.inf:
        return dn.class_xor
    rel = np.array([v.mantissa * math.exp(v.log_scale - ref) for v in fs])
    scores = []
    for c in range(4):
        signs = [(-1) ** bin(c & t).count("1") for t in (1, 2, 3)]
        scores.append(float(np.dot(signs, rel)))
    chosen = int(np.argmax(scores))
    return chosen ^ dn.class_xor


def sample_errors(problem, shots: int, seed: int, start: int = 0):
    """Deterministic i.i.d. stream of (true class, syndrome).

    Each shot draws from its own derived RNG stream (seed, shot index), so
    the stream is reproducible independently of batching or chunking; start
    skips ahead to a given shot index without replaying earlier shots.
    """
    for i in range(start, start + shots):
        rng = np.random.default_rng((seed, i))
        yield problem.sample(rng)


def logical_error_rate(
    problem,
    shots: int,
    seed: int,
    config: ContractionConfig = ContractionConfig(),
    d: int = 0,
    p: float | None = None,
    progress=None,
) -> ExperimentRecord:
    """Monte Carlo estimate of the decoder failure rate."""
    if shots < 1:
        raise ValueError("shots must be positive")
    t0 = time.time()
    failures = 0
    for i, (true_cls, m) in enumerate(sample_errors(problem, shots, seed)):
        if _decide(problem, m, config) != true_cls:
            failures += 1
        if progress is not None:
            progress(i + 1, failures)
    return ExperimentRecord(
        problem_id=problem.problem_id,
        p=getattr(problem, "p", float("nan")) if p is None else p,
        d=d,
        shots=shots,
        failures=failures,
        seed=seed,
        config=config,
        wall_time=time.time() - t0,
    )


@dataclass
class CrossingEstimate:
    found: bool
    p_c: float | None = None
    interval: tuple | None = None
    replicas_found: int = 0
    replicas: int = 0


def _polyline_crossing(ps, r1, r2):
    """First crossing of two polylines sampled on the same grid, by linear
    interpolation on their difference; None if no sign change."""
    diff = np.asarray(r1, dtype=float) - np.asarray(r2, dtype=float)
    for i in range(len(ps) - 1):
        a, b = diff[i], diff[i + 1]
        if a == 0.0:
            return float(ps[i])
        if a * b < 0:
            t = a / (a - b)
            return float(ps[i] + t * (ps[i + 1] - ps[i]))
    if diff[-1] == 0.0:
        return float(ps[-1])
    return None


def estimate_crossing(
    ps,
    curves: dict,
    shots: dict | int,
    replicas: int = 400,
    seed: int = 20220901,
    level: float = 0.95,
) -> CrossingEstimate:
    """Threshold estimate from logical-error-rate curves of two distances.

    curves maps distance -> list of rates on the common p grid; shots gives
    the per-point sample size (one int, or per distance).  The central
    estimate is the linear-interpolation crossing; the interval comes from
    a binomial parametric bootstrap (resampling failure counts at the
    observed rates) with at least 200 replicas.
    """
    if len(curves) != 2:
        raise ValueError("crossing estimation needs exactly two distances")
    if len(ps) < 3:
        raise ValueError("need at least three grid points")
    if replicas < 200:
        raise ValueError("use at least 200 bootstrap replicas")
    (d1, r1), (d2, r2) = sorted(curves.items())
    if isinstance(shots, int):
        shots = {d1: shots, d2: shots}
    center = _polyline_crossing(ps, r1, r2)
    rng = np.random.default_rng(seed)
    found = []
    for _ in range(replicas):
        b1 = rng.binomial(shots[d1], r1) / shots[d1]
        b2 = rng.binomial(shots[d2], r2) / shots[d2]
        c = _polyline_crossing(ps, b1, b2)
        if c is not None:
            found.append(c)
    if center is None or len(found) < replicas // 2:
        return CrossingEstimate(False, None, None, len(found), replicas)
    lo, hi = np.percentile(found, [(1 - level) / 2 * 100, (1 + level) / 2 * 100])
    return CrossingEstimate(True, center, (float(lo), float(hi)), len(found), replicas)
