"""Detector error models: parsing, canonicalization and cubic compression.

A detector error model is the triple (H, p, l): a list of independent
error mechanisms, each firing with probability p_i, flipping a set of
detectors (a column of H) and possibly a logical observable (l).  The text
dialect is line based:

    error(0.125) D0 D2 L0
    detector(1, 0, 2) D3
    logical_observable L0
    # comment

`detector` lines attach coordinates; both declaration lines are optional.
Repeat blocks / coordinate shifts of richer dialects are not supported --
inputs must be pre-flattened.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np


class DemParseError(ValueError):
    pass


@dataclass(frozen=True)
class Mechanism:
    p: float
    detectors: tuple[int, ...]
    logicals: tuple[int, ...]

    def key(self) -> tuple:
        return (self.detectors, self.logicals)


@dataclass
class DetectorErrorModel:
    mechanisms: list[Mechanism] = field(default_factory=list)
    n_detectors: int = 0
    n_logicals: int = 0
    detector_coords: dict[int, tuple[float, ...]] = field(default_factory=dict)
    # syndrome bits flipped deterministically (from merged p=1 mechanisms)
    baseline_flips: tuple[int, ...] = ()
    baseline_logicals: tuple[int, ...] = ()

    @property
    def n_mechanisms(self) -> int:
        return len(self.mechanisms)

    def check_matrix(self) -> np.ndarray:
        """H as a dense (n_detectors x n_mechanisms) F2 matrix."""
        h = np.zeros((self.n_detectors, self.n_mechanisms), dtype=np.uint8)
        for j, mech in enumerate(self.mechanisms):
            for d in mech.detectors:
                h[d, j] = 1
        return h

    def logical_matrix(self) -> np.ndarray:
        l = np.zeros((self.n_logicals, self.n_mechanisms), dtype=np.uint8)
        for j, mech in enumerate(self.mechanisms):
            for o in mech.logicals:
                l[o, j] = 1
        return l

    def scaled(self, factor: float) -> "DetectorErrorModel":
        """Model with every mechanism probability multiplied by factor."""
        mechs = []
        for mech in self.mechanisms:
            p = mech.p * factor
            if not 0 <= p <= 1:
                raise ValueError("scaled probability out of range")
            mechs.append(Mechanism(p, mech.detectors, mech.logicals))
        return DetectorErrorModel(
            mechanisms=mechs,
            n_detectors=self.n_detectors,
            n_logicals=self.n_logicals,
            detector_coords=dict(self.detector_coords),
            baseline_flips=self.baseline_flips,
            baseline_logicals=self.baseline_logicals,
        )


_ERROR_RE = re.compile(r"^error\(([^)]*)\)\s*(.*)$")
_DETECTOR_RE = re.compile(r"^detector\(([^)]*)\)\s*(.*)$")


def parse_dem(text: str) -> DetectorErrorModel:
    model = DetectorErrorModel()
    seen_detector_decl: set[int] = set()
    max_det = -1
    max_log = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        err = _ERROR_RE.match(line)
        if err:
            try:
                p = float(err.group(1))
            except ValueError:
                raise DemParseError(f"line {lineno}: malformed probability {err.group(1)!r}")
            if not 0 <= p <= 1:
                raise DemParseError(f"line {lineno}: probability {p} out of [0,1]")
            dets, logs = [], []
            for tok in err.group(2).split():
                if tok.startswith("D"):
                    dets.append(int(tok[1:]))
                elif tok.startswith("L"):
                    logs.append(int(tok[1:]))
                else:
                    raise DemParseError(f"line {lineno}: unknown target {tok!r}")
            model.mechanisms.append(
                Mechanism(p, tuple(sorted(set(dets))), tuple(sorted(set(logs))))
            )
            max_det = max([max_det] + dets)
            max_log = max([max_log] + logs)
            continue
        det = _DETECTOR_RE.match(line)
        if det:
            targets = det.group(2).split()
            if len(targets) != 1 or not targets[0].startswith("D"):
                raise DemParseError(f"line {lineno}: detector line needs one D target")
            idx = int(targets[0][1:])
            if idx in seen_detector_decl:
                raise DemParseError(f"line {lineno}: duplicate detector D{idx}")
            seen_detector_decl.add(idx)
            coords = tuple(
                float(x) for x in det.group(1).split(",") if x.strip() != ""
            )
            model.detector_coords[idx] = coords
            max_det = max(max_det, idx)
            continue
        if line.startswith("logical_observable"):
            toks = line.split()
            if len(toks) != 2 or not toks[1].startswith("L"):
                raise DemParseError(f"line {lineno}: malformed logical_observable")
            max_log = max(max_log, int(toks[1][1:]))
            continue
        raise DemParseError(f"line {lineno}: unknown instruction {line!r}")
    model.n_detectors = max_det + 1
    model.n_logicals = max_log + 1
    return model


def serialize_dem(model: DetectorErrorModel) -> str:
    lines = []
    for mech in model.mechanisms:
        targets = [f"D{d}" for d in mech.detectors] + [f"L{o}" for o in mech.logicals]
        lines.append(f"error({mech.p!r}) " + " ".join(targets))
    for idx in sorted(model.detector_coords):
        coords = ", ".join(repr(c) for c in model.detector_coords[idx])
        lines.append(f"detector({coords}) D{idx}")
    for o in range(model.n_logicals):
        lines.append(f"logical_observable L{o}")
    return "\n".join(lines) + "\n"


def merge_mechanisms(model: DetectorErrorModel) -> DetectorErrorModel:
    """Combine mechanisms with identical (detectors, logicals).

    XOR of independent Bernoullis: p = p1(1-p2) + p2(1-p1).  Mechanisms
    landing at p=0 are dropped; p=1 mechanisms flip the deterministic
    baseline syndrome and are dropped.
    """
    acc: dict[tuple, float] = {}
    order: list[tuple] = []
    for mech in model.mechanisms:
        k = mech.key()
        if k in acc:
            q = acc[k]
            acc[k] = q * (1 - mech.p) + mech.p * (1 - q)
        else:
            acc[k] = mech.p
            order.append(k)
    merged = []
    base_d = set(model.baseline_flips)
    base_l = set(model.baseline_logicals)
    for k in order:
        p = acc[k]
        if p == 0.0:
            continue
        if p == 1.0:
            base_d ^= set(k[0])
            base_l ^= set(k[1])
            continue
        merged.append(Mechanism(p, k[0], k[1]))
    return DetectorErrorModel(
        mechanisms=merged,
        n_detectors=model.n_detectors,
        n_logicals=model.n_logicals,
        detector_coords=dict(model.detector_coords),
        baseline_flips=tuple(sorted(base_d)),
        baseline_logicals=tuple(sorted(base_l)),
    )


def brute_force_class_probs(model: DetectorErrorModel, m) -> np.ndarray:
    """p_{m,L} for every logical class L by summing over mechanism subsets.

    Exponential in n_mechanisms; oracle use only.
    """
    m = np.asarray(m, dtype=np.uint8)
    nm = model.n_mechanisms
    if nm > 24:
        raise ValueError("too many mechanisms for brute force")
    h = model.check_matrix()
    l = model.logical_matrix()
    probs = np.array([mech.p for mech in model.mechanisms])
    out = np.zeros(2 ** model.n_logicals)
    base = np.zeros(model.n_detectors, dtype=np.uint8)
    for d in model.baseline_flips:
        base[d] = 1
    base_l = np.zeros(model.n_logicals, dtype=np.uint8)
    for o in model.baseline_logicals:
        base_l[o] = 1
    for subset in range(2 ** nm):
        x = np.array([(subset >> j) & 1 for j in range(nm)], dtype=np.uint8)
        syn = (h @ x + base) % 2
        if not np.array_equal(syn, m):
            continue
        cls = (l @ x + base_l) % 2
        idx = 0
        for bit in cls:
            idx = (idx << 1) | int(bit)
        w = np.prod(np.where(x == 1, probs, 1 - probs))
        out[idx] += w
    return out


# ---------------------------------------------------------------------------
# Cubic compression: snake every mechanism onto a 3D lattice of detector
# sites, truncating bonds with the simple update, so that one offline
# artifact answers every syndrome by fixing open detector legs.
# ---------------------------------------------------------------------------

from scipy.linalg import qr as _qr

from .approx import DEFAULT_CUTOFF, _svd_trunc
from .builders import DecodingNetwork
from .tensornet import Tensor, TensorNetwork

# bond axes of a site tensor: +x, -x, +y, -y, +z, -z; axis 6 is the open leg
_AXIS6 = {
    (1, 0, 0): 0, (-1, 0, 0): 1,
    (0, 1, 0): 2, (0, -1, 0): 3,
    (0, 0, 1): 4, (0, 0, -1): 5,
}
_STEP6 = {v: k for k, v in _AXIS6.items()}


class CompressionError(RuntimeError):
    pass


def _box_sites(dims):
    w, h, d = dims
    return [(x, y, z) for x in range(w) for y in range(h) for z in range(d)]


def layout_detectors(model: DetectorErrorModel, dims=None, extra: int = 0):
    """Assign each detector (plus `extra` trailing pseudo-detectors, used
    for logical-observable legs) an injective lattice site.

    Detectors with coordinates go to their rounded (x, y, t) position,
    shifted so the minimum is 0; collisions and coordinate-less detectors
    fall back to the nearest free site (L1 distance, lexicographic scan).
    Returns (dims, {index: site}).
    """
    total = model.n_detectors + extra
    desired = {}
    for i in range(model.n_detectors):
        c = model.detector_coords.get(i)
        if c is not None:
            c = tuple(c) + (0.0, 0.0, 0.0)
            desired[i] = tuple(int(round(v)) for v in c[:3])
    if desired:
        lo = [min(p[a] for p in desired.values()) for a in range(3)]
        desired = {i: tuple(p[a] - lo[a] for a in range(3)) for i, p in desired.items()}
    if dims is None:
        if desired:
            dims = [max(p[a] for p in desired.values()) + 1 for a in range(3)]
        else:
            s = max(1, int(math.ceil(total ** (1 / 3))))
            dims = [s, s, max(1, int(math.ceil(total / (s * s))))]
        while dims[0] * dims[1] * dims[2] < total:
            dims[int(np.argmin(dims))] += 1
        dims = tuple(dims)
    if dims[0] * dims[1] * dims[2] < total:
        raise CompressionError("more detectors than lattice sites")
    occupied = set()
    sites = {}
    all_sites = _box_sites(dims)
    for i in range(total):
        want = desired.get(i, (0, 0, 0))
        if want in set(all_sites) and want not in occupied:
            pick = want
        else:
            free = [s for s in all_sites if s not in occupied]
            pick = min(free, key=lambda s: (sum(abs(s[a] - want[a]) for a in range(3)), s))
        occupied.add(pick)
        sites[i] = pick
    return dims, sites


def _manhattan_path(a, b):
    """Sites strictly between a and b walking axis-priority x, then y, then z."""
    out = []
    cur = list(a)
    for ax in range(3):
        step = 1 if b[ax] > cur[ax] else -1
        while cur[ax] != b[ax]:
            cur[ax] += step
            out.append(tuple(cur))
    return out


class CompressedCubicNetwork:
    """W x H x D lattice of tensors, one open detector leg per site.

    Site tensors have six bond axes (+x,-x,+y,-y,+z,-z) and a trailing open
    leg of dimension 2 (detector / logical sites) or 1 (filler sites).  The
    network value is the contraction with diag(lam) on every bond; fixing
    every open leg to an outcome vector m yields (up to truncation error)
    the probability p_{m,L}.
    """

    def __init__(self, model: DetectorErrorModel, dims, site_of, chi, cutoff):
        self.model = model
        self.dims = tuple(dims)
        self.site_of = dict(site_of)  # detector/pseudo index -> site
        self.chi = chi
        self.cutoff = cutoff
        self.log_scale = 0.0
        self.truncation_cut = 0.0
        open_sites = set(site_of.values())
        self.sites = {}
        for pos in _box_sites(dims):
            if pos in open_sites:
                self.sites[pos] = np.array([1.0, 0.0]).reshape((1,) * 6 + (2,))
            else:
                self.sites[pos] = np.ones((1,) * 7)
        self.lam = {}

    # -- bond helpers ------------------------------------------------------
    @staticmethod
    def _bond(p, q):
        return (p, q) if p < q else (q, p)

    def get_lam(self, p, q):
        b = self._bond(p, q)
        if b not in self.lam:
            self.lam[b] = np.ones(1)
        return self.lam[b]

    def _rescale(self, pos):
        a = self.sites[pos]
        n = float(np.max(np.abs(a)))
        if n > 0 and (n > 2.0 or n < 0.5):
            e = math.floor(math.log2(n))
            self.sites[pos] = a / (2.0 ** e)
            self.log_scale += e * math.log(2.0)

    # -- snaking -----------------------------------------------------------
    def touched_sites(self, mech: Mechanism):
        idx = list(mech.detectors) + [
            self.model.n_detectors + o for o in mech.logicals
        ]
        return sorted(self.site_of[i] for i in idx)

    def snake(self, mech: Mechanism) -> None:
        """Absorb one error mechanism along an axis-priority Manhattan path
        through its (lexicographically sorted) touched sites, then truncate
        the path bonds."""
        touched = self.touched_sites(mech)
        path = [touched[0]]
        for nxt in touched[1:]:
            path.extend(_manhattan_path(path[-1], nxt))
        touched_set = set(touched)
        marked = set()
        w = (1.0 - mech.p, mech.p)
        if len(path) == 1:
            pos = path[0]
            site = self.sites[pos]
            dd = site.shape[6]
            m = np.zeros((dd, dd))
            for b in (0, 1):
                for din in range(dd):
                    m[din, din ^ b if dd == 2 else din] += w[b]
            self.sites[pos] = np.tensordot(site, m, axes=[[6], [0]])
            self._rescale(pos)
            return
        for i, pos in enumerate(path):
            first, last = i == 0, i == len(path) - 1
            t = 1 if (pos in touched_set and pos not in marked) else 0
            marked.add(pos)
            site = self.sites[pos]
            dd = site.shape[6]
            win = 1 if first else 2
            wout = 1 if last else 2
            m = np.zeros((dd, dd, win, wout))
            for b in (0, 1):
                weight = w[b] if first else 1.0
                bi = 0 if win == 1 else b
                bo = 0 if wout == 1 else b
                for din in range(dd):
                    dout = din ^ (b & t) if dd == 2 else din
                    m[din, dout, bi, bo] += weight
            # axes after tensordot: bonds 0..5, open 6, wire-in 7, wire-out 8
            T = np.tensordot(site, m, axes=[[6], [0]])
            if not last:
                ax = _AXIS6[tuple(np.subtract(path[i + 1], pos))]
                T = np.moveaxis(T, 8, ax + 1)
                sh = list(T.shape)
                sh[ax] *= sh[ax + 1]
                del sh[ax + 1]
                T = T.reshape(sh)
                b = self._bond(pos, path[i + 1])
                self.lam[b] = np.kron(self.get_lam(pos, path[i + 1]), np.ones(wout))
            else:
                T = T.reshape(T.shape[:-1])
            if not first:
                ax = _AXIS6[tuple(np.subtract(path[i - 1], pos))]
                T = np.moveaxis(T, 7, ax + 1)
                sh = list(T.shape)
                sh[ax] *= sh[ax + 1]
                del sh[ax + 1]
                T = T.reshape(sh)
            else:
                T = T.reshape(T.shape[:7])
            self.sites[pos] = T
            self._rescale(pos)
        for i in range(len(path) - 1):
            self.truncate_bond(path[i], path[i + 1])

    # -- simple-update truncation -----------------------------------------
    def _absorb_outer(self, pos, skip_axis, invert=False):
        a = self.sites[pos]
        for ax in range(6):
            if ax == skip_axis or a.shape[ax] == 1:
                continue
            npos = tuple(int(v) for v in np.add(pos, _STEP6[ax]))
            lam = self.get_lam(pos, npos)
            if invert:
                if np.min(lam) < self.cutoff * np.max(lam):
                    raise CompressionError("bond weights degenerate; chi too small")
                lam = 1.0 / lam
            a = a * lam.reshape((-1,) + (1,) * (a.ndim - 1 - ax))
        return a

    def truncate_bond(self, p1, p2, chi=None) -> None:
        """Truncate the (p1, p2) bond to chi singular values in the locally
        optimal (simple update) gauge."""
        chi = self.chi if chi is None else chi
        ax1 = _AXIS6[tuple(np.subtract(p2, p1))]
        ax2 = _AXIS6[tuple(np.subtract(p1, p2))]
        lam12 = self.get_lam(p1, p2)
        n = len(lam12)
        if n == 1:
            return
        A = self._absorb_outer(p1, ax1)
        B = self._absorb_outer(p2, ax2)
        ra = [i for i in range(A.ndim) if i != ax1]
        rb = [i for i in range(B.ndim) if i != ax2]
        MA = A.transpose(ra + [ax1]).reshape(-1, n)
        MB = B.transpose(rb + [ax2]).reshape(-1, n)
        Q1, R1 = _qr(MA, mode="economic", check_finite=False)
        Q2, R2 = _qr(MB, mode="economic", check_finite=False)
        core = (R1 * lam12) @ R2.T
        nrm = float(np.linalg.norm(core))
        if nrm == 0.0:
            keep = 1
            lam_new = np.ones(1)
            N1 = np.zeros((MA.shape[0], 1))
            N2 = np.zeros((MB.shape[0], 1))
            self.log_scale += 0.0
        else:
            u, s, vt = _svd_trunc(core, chi if chi else max(core.shape), self.cutoff)
            keep = len(s)
            self.truncation_cut += max(0.0, 1.0 - float(np.sum(s ** 2)) / nrm ** 2)
            sn = float(np.linalg.norm(s))
            lam_new = s / sn
            self.log_scale += math.log(sn)
            N1 = Q1 @ u
            N2 = Q2 @ vt.T
        sa = [A.shape[i] for i in ra]
        sb = [B.shape[i] for i in rb]
        A2 = np.moveaxis(N1.reshape(sa + [keep]), -1, ax1)
        B2 = np.moveaxis(N2.reshape(sb + [keep]), -1, ax2)
        self.sites[p1] = A2
        self.sites[p2] = B2
        # restore the gauge: divide the outer bond weights back out
        self.sites[p1] = self._absorb_outer(p1, ax1, invert=True)
        self.sites[p2] = self._absorb_outer(p2, ax2, invert=True)
        self.lam[self._bond(p1, p2)] = lam_new
        self._rescale(p1)
        self._rescale(p2)

    def truncate_all(self, chi) -> None:
        """Global truncation pass bringing every bond dimension down to chi."""
        bonds = sorted(self.lam)
        for p1, p2 in bonds + bonds[::-1]:
            if len(self.get_lam(p1, p2)) > 1:
                self.truncate_bond(p1, p2, chi)

    def bond_dims(self):
        return {b: len(l) for b, l in self.lam.items() if len(l) > 1}

    # -- decoding network --------------------------------------------------
    def _closed_network(self, m, t_bits) -> TensorNetwork:
        m = np.asarray(m, dtype=np.uint8)
        base = np.zeros(self.model.n_detectors, dtype=np.uint8)
        for d in self.model.baseline_flips:
            base[d] = 1
        m = (m ^ base).astype(np.uint8)
        det_at = {pos: i for i, pos in self.site_of.items()}
        net = TensorNetwork()
        net.log_scale = self.log_scale
        scalar = 1.0
        for pos in sorted(self.sites):
            a = self.sites[pos]
            idx = det_at.get(pos)
            if a.shape[6] == 1:
                a = a[..., 0]
            elif idx is not None and idx < self.model.n_detectors:
                vec = np.array([1.0, 0.0]) if m[idx] == 0 else np.array([0.0, 1.0])
                a = np.tensordot(a, vec, axes=[[6], [0]])
            else:  # logical pseudo-detector: Hadamard-terminated port
                o = idx - self.model.n_detectors
                sign = -1.0 if t_bits[o] else 1.0
                a = np.tensordot(a, np.array([1.0, sign]), axes=[[6], [0]])
            legs = []
            keep_axes = []
            for ax in range(6):
                if a.shape[ax] == 1:
                    continue
                npos = tuple(int(v) for v in np.add(pos, _STEP6[ax]))
                lam = self.get_lam(pos, npos)
                a = a * np.sqrt(lam).reshape((-1,) + (1,) * (a.ndim - 1 - ax))
                bond = self._bond(pos, npos)
                legs.append(f"b{bond[0]}|{bond[1]}")
                keep_axes.append(ax)
            a = a.reshape([a.shape[ax] for ax in keep_axes]) if keep_axes else a.reshape(())
            if not legs:
                scalar *= float(a)
                continue
            net.add(Tensor.dense(np.ascontiguousarray(a), legs), coord=pos)
        if not net.tensors or scalar != 1.0:
            first = min(net.tensors) if net.tensors else None
            if first is None:
                net.add(Tensor.dense(np.array(scalar), []), coord=None)
            elif scalar != 1.0:
                net.tensors[first].values = net.tensors[first].densify() * scalar
        return net

    def decoding_network(self, m, ports: str = "batch") -> DecodingNetwork:
        if ports != "batch":
            raise ValueError("compressed networks support batch ports only")
        k = self.model.n_logicals
        from .builders import _settings

        variants = [
            (lambda t: (lambda: self._closed_network(m, t)))(t)
            for t in _settings(k)
        ]
        xor = 0
        for o in self.model.baseline_logicals:
            xor |= 1 << (k - 1 - o)
        return DecodingNetwork("dem", k, "wht", variants, class_xor=xor)

    # -- persistence -------------------------------------------------------
    def save(self, path) -> None:
        data = {
            "version": np.array(1),
            "dims": np.array(self.dims),
            "chi": np.array(self.chi if self.chi else 0),
            "cutoff": np.array(self.cutoff),
            "log_scale": np.array(self.log_scale),
            "det_idx": np.array(sorted(self.site_of)),
            "det_pos": np.array([self.site_of[i] for i in sorted(self.site_of)]),
            "dem_text": np.frombuffer(
                serialize_dem(self.model).encode(), dtype=np.uint8
            ),
        }
        for pos, a in self.sites.items():
            data["T_%d_%d_%d" % pos] = a
        for (p, q), lam in self.lam.items():
            data["L_%d_%d_%d__%d_%d_%d" % (p + q)] = lam
        np.savez_compressed(path, **data)

    @classmethod
    def load(cls, path) -> "CompressedCubicNetwork":
        z = np.load(path)
        if int(z["version"]) != 1:
            raise CompressionError("unknown cache version")
        model = parse_dem(bytes(z["dem_text"]).decode())
        model = merge_mechanisms(model)
        dims = tuple(int(v) for v in z["dims"])
        site_of = {
            int(i): tuple(int(c) for c in pos)
            for i, pos in zip(z["det_idx"], z["det_pos"])
        }
        chi = int(z["chi"]) or None
        self = cls(model, dims, site_of, chi, float(z["cutoff"]))
        self.log_scale = float(z["log_scale"])
        for key in z.files:
            if key.startswith("T_"):
                pos = tuple(int(v) for v in key[2:].split("_"))
                self.sites[pos] = z[key]
            elif key.startswith("L_"):
                a, b = key[2:].split("__")
                p = tuple(int(v) for v in a.split("_"))
                q = tuple(int(v) for v in b.split("_"))
                self.lam[(p, q)] = z[key]
        return self


def compress_dem(
    model: DetectorErrorModel,
    chi_compress=None,
    dims=None,
    cutoff: float = DEFAULT_CUTOFF,
) -> CompressedCubicNetwork:
    """Offline compression of a detector error model onto a cubic lattice.

    Mechanisms are merged, laid out (logical observables get pseudo-sites),
    and snaked in deterministic order: sorted by (first touched site in
    lexicographic order, detector-set size).  chi_compress=None keeps every
    singular value above the relative cutoff.
    """
    model = merge_mechanisms(model)
    dims, site_of = layout_detectors(model, dims, extra=model.n_logicals)
    state = CompressedCubicNetwork(model, dims, site_of, chi_compress, cutoff)
    order = sorted(
        range(len(model.mechanisms)),
        key=lambda j: (
            state.touched_sites(model.mechanisms[j])[0],
            len(model.mechanisms[j].detectors),
            j,
        ),
    )
    for j in order:
        state.snake(model.mechanisms[j])
    return state
