"""Approximate contraction engines.

Two engines are provided.  mps_contract_2d sweeps a boundary MPS across a
planar network whose tensors carry 2D integer coordinates with unit-step
bonds.  sweep_contract_3d contracts a layered 3D network (3D integer
coordinates, unit-step bonds) bottom-to-top along the first axis: each
layer is decomposed into per-site residual tensors and two-site gates,
gates are applied to a 2D carrier state with simple-update truncation
(per-bond Vidal-gauge lambda vectors), and the final 2D network is handed
to the boundary MPS.

Singular values below a relative cutoff (default 1e-14) are always
discarded, so exact rank structure is preserved without noise
amplification; the chi arguments cap what survives the cutoff.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr as _qr

from .builders import simplify
from .tensornet import ContractionValue, Tensor, TensorNetwork

DEFAULT_CUTOFF = 1e-14


def _svd_trunc(M: np.ndarray, chi: int, cutoff: float = DEFAULT_CUTOFF, rng=None):
    """Truncated SVD: keep at most chi singular values above the relative
    cutoff.  Falls back to a randomized range finder for very lopsided
    matrices where a full decomposition would dominate the runtime; with
    one power iteration the sketch is exact (to roundoff) whenever the true
    numerical rank fits inside it."""
    m, n = M.shape
    k = min(chi, m, n)
    use_randomized = rng is not None and min(m, n) > 2 * (k + 16) and M.size > 1 << 18
    if use_randomized:
        s_dim = k + 16
        if m <= n:
            Y = M @ (M.T @ (M @ rng.standard_normal((n, s_dim))))
            Q, _ = _qr(Y, mode='economic', check_finite=False)
            u, s, vt = np.linalg.svd(Q.T @ M, full_matrices=False)
            u = Q @ u
        else:
            Y = M.T @ (M @ (M.T @ rng.standard_normal((m, s_dim))))
            Q, _ = _qr(Y, mode='economic', check_finite=False)
            u, s, vt = np.linalg.svd(M @ Q, full_matrices=False)
            vt = vt @ Q.T
    else:
        u, s, vt = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return u[:, :1] * 0.0, s[:1], vt[:1] * 0.0
    keep = max(1, min(k, int(np.count_nonzero(s > cutoff * s[0]))))
    return u[:, :keep], s[:keep], vt[:keep]


@dataclass
class MpsState:
    """Open-boundary MPS; site arrays have legs (left, right, physical)."""

    sites: list
    max_chi: int
    log_scale: float = 0.0

    @classmethod
    def product(cls, phys_dims, max_chi) -> "MpsState":
        return cls([np.ones((1, 1, d)) for d in phys_dims], max_chi)

    def bond_dims(self) -> list:
        return [s.shape[1] for s in self.sites[:-1]]

    def _rescale(self, i: int) -> None:
        m = np.max(np.abs(self.sites[i]))
        if m > 0 and (m >= 2.0 or m < 1.0):
            e = math.floor(math.log2(m))
            self.sites[i] = self.sites[i] / 2.0 ** e
            self.log_scale += e * math.log(2.0)

    def apply_mpo_zip(self, mpo: list, cutoff: float = DEFAULT_CUTOFF, rng=None) -> None:
        """Apply an MPO column (site legs (down, up, p_in, p_out)) with
        zip-up truncation, sweeping from site 0 upward."""
        n = len(self.sites)
        carry = None
        new_sites = []
        for i in range(n):
            A = self.sites[i]
            W = mpo[i]
            if carry is None:
                theta = np.einsum("lrp,dupq->ldruq", A, W, optimize=True)
                l, d, r, u, q = theta.shape
                theta = theta.reshape(l * d, r, u, q)
            else:
                # absorbing the carry first keeps intermediates small
                T = np.tensordot(carry, A, axes=([1], [0]))  # (K, d, r, p)
                theta = np.einsum("kdrp,dupq->kruq", T, W, optimize=True)
            K, r, u, q = theta.shape
            if i == n - 1:
                new_sites.append(theta.reshape(K, r * u, q))
                carry = None
            else:
                mat = theta.transpose(0, 3, 1, 2).reshape(K * q, r * u)
                uu, ss, vvt = _svd_trunc(mat, self.max_chi, cutoff, rng)
                keep = len(ss)
                new_sites.append(uu.reshape(K, q, keep).transpose(0, 2, 1))
                cm = ss[:, None] * vvt
                f = np.max(np.abs(cm))
                if f > 0:
                    cm = cm / f
                    self.log_scale += math.log(f)
                carry = cm.reshape(keep, r, u)
        self.sites = new_sites
        for i in range(n):
            self._rescale(i)

    def close(self) -> ContractionValue:
        """Contract a fully closed MPS (all physical dims 1) to a scalar."""
        mat = np.eye(1)
        log = self.log_scale
        for A in self.sites:
            if A.shape[2] != 1:
                raise ValueError("MPS still has open physical legs")
            mat = mat @ A[:, :, 0]
            f = np.max(np.abs(mat))
            if f == 0.0:
                return ContractionValue(0.0)
            mat = mat / f
            log += math.log(f)
        return ContractionValue.from_float(float(mat[0, 0]), log)


def _partners(net: TensorNetwork):
    out = {}
    for leg, (a, b) in net.bonds().items():
        out[(a, leg)] = b
        out[(b, leg)] = a
    return out


def _grid_tensors_2d(net: TensorNetwork):
    """Classify a planar network into per-position dense arrays with merged
    legs in (down, up, left, right) order."""
    raw = {}
    for tid in net.tensors:
        if tid not in net.coords or len(net.coords[tid]) != 2:
            raise ValueError("boundary MPS needs 2D coordinates on every tensor")
        raw[tid] = tuple(net.coords[tid])
    # rank-compress each axis so that stride-2 lattices still form a grid
    xrank = {v: i for i, v in enumerate(sorted({c[0] for c in raw.values()}))}
    yrank = {v: i for i, v in enumerate(sorted({c[1] for c in raw.values()}))}
    pos_of = {}
    coord_of = {}
    for tid, c in raw.items():
        rc = (xrank[c[0]], yrank[c[1]])
        if rc in pos_of:
            raise ValueError(f"two tensors share position {c}")
        pos_of[rc] = tid
        coord_of[tid] = rc
    partners = _partners(net)
    grid = {}
    for c, tid in pos_of.items():
        t = net.tensors[tid]
        roles = {"down": [], "up": [], "left": [], "right": []}
        for leg in t.legs:
            if (tid, leg) not in partners:
                raise ValueError("network has open legs")
            oc = coord_of[partners[(tid, leg)]]
            step = (oc[0] - c[0], oc[1] - c[1])
            role = {(-1, 0): "left", (1, 0): "right",
                    (0, -1): "down", (0, 1): "up"}.get(step)
            if role is None:
                raise ValueError(f"bond {leg!r} is not a unit grid step")
            roles[role].append(leg)
        for r in roles:
            roles[r].sort()
        order = roles["down"] + roles["up"] + roles["left"] + roles["right"]
        arr = np.transpose(t.densify(), [t.legs.index(l) for l in order])
        dims = [
            int(np.prod([t.dim(l) for l in roles[r]], dtype=np.int64))
            for r in ("down", "up", "left", "right")
        ]
        grid[c] = arr.reshape(dims)
    xs = sorted({c[0] for c in grid})
    ys = sorted({c[1] for c in grid})
    return xs, ys, grid


def mps_contract_2d(net: TensorNetwork, chi: int,
                    cutoff: float = DEFAULT_CUTOFF, seed: int = 709) -> ContractionValue:
    """Contract a closed planar grid network with a boundary MPS of bond
    dimension at most chi, sweeping across columns in x order."""
    work = net.copy()
    simplify(work)
    if not work.tensors:
        return ContractionValue.from_float(1.0, work.log_scale)
    rng = np.random.default_rng(seed)
    xs, ys, grid = _grid_tensors_2d(work)
    mps = MpsState.product([1] * len(ys), chi)
    mps.log_scale = work.log_scale
    for x in xs:
        mpo = []
        for i, y in enumerate(ys):
            if (x, y) in grid:
                arr = grid[(x, y)]
                if arr.shape[2] != mps.sites[i].shape[2]:
                    raise ValueError("grid bond mismatch entering column")
                mpo.append(arr)
            else:
                if mps.sites[i].shape[2] != 1:
                    raise ValueError("bond crosses an empty grid position")
                mpo.append(np.ones((1, 1, 1, 1)))
        mps.apply_mpo_zip(mpo, cutoff, rng)
    return mps.close()


# ---------------------------------------------------------------------------
# 3D layer sweep


@dataclass
class GateSequence:
    """Per-layer decomposition: site residual tensors plus two-site gates.

    residuals maps grid position -> (array, gate keys); array axes are
    (down, up, g_1, ..., g_k) and the key list names the gate consuming
    each g axis, in order.  gates is a list of (key, pos1, pos2, matrix)
    where matrix[g1, g2] couples the g legs split off the two sites.
    """

    residuals: dict
    gates: list

    def replay(self) -> TensorNetwork:
        """Reassemble the layer as a network (for exactness checks); the
        vertical legs stay open as 'dn@pos' / 'up@pos'."""
        net = TensorNetwork()
        for pos, (arr, gkeys) in self.residuals.items():
            legs = [f"dn@{pos}", f"up@{pos}"] + [f"g{k}@{pos}" for k in gkeys]
            net.add(Tensor.dense(arr, legs))
        for key, p1, p2, mat in self.gates:
            net.add(Tensor.dense(mat, [f"g{key}@{p1}", f"g{key}@{p2}"]))
        return net


def _split_site(t: Tensor, down, up, inplane, chi_split, cutoff):
    """Residual array (down, up, g...) plus per-leg split factors.

    Structured (equality/parity) nodes split exactly: the factor is the
    identity on the original leg, encoded as None.  Dense nodes have each
    in-plane leg peeled off by an SVD capped at chi_split.
    """
    order = down + up + inplane
    # site tensors can legitimately exceed the exact-contraction densify
    # cap at large bond dimension; 2^26 floats is still only 0.5 GB
    arr = np.transpose(t.densify(cap=1 << 26), [t.legs.index(l) for l in order])
    d_dim = int(np.prod([t.dim(l) for l in down], dtype=np.int64))
    u_dim = int(np.prod([t.dim(l) for l in up], dtype=np.int64))
    arr = arr.reshape([d_dim, u_dim] + [t.dim(l) for l in inplane])
    if t.kind != "dense":
        return arr, {l: None for l in inplane}
    factors = {}
    for ax, leg in enumerate(inplane):
        moved = np.moveaxis(arr, 2 + ax, 0)
        mshape = moved.shape
        u_, s_, vt_ = _svd_trunc(moved.reshape(mshape[0], -1), chi_split, cutoff)
        factors[leg] = u_ * s_
        arr = np.moveaxis(vt_.reshape((len(s_),) + mshape[1:]), 0, 2 + ax)
    return arr, factors


def _build_gate(c1, e_mat, c2, bond_dim):
    mid = e_mat if e_mat is not None else np.eye(bond_dim)
    left = mid if c1 is None else c1.T @ mid
    return left if c2 is None else left @ c2


def _plan_plane(net, tids, partners, a, chi_split, cutoff, reverse=False,
                open_vertical=False, force=None):
    """Decompose one plane into a GateSequence.

    Vertical legs are bonds leaving the plane (the incoming sweep side is
    'down'); with open_vertical, unbonded legs named 'dn*'/'up*' count as
    vertical instead.  2-leg tensors sitting at the midpoint between two
    in-plane partners become edge tensors folded into gates.  force picks
    the splitting style for the public split_layer_* wrappers.
    """
    plane_set = set(tids)
    edge_tids = set()
    for tid in tids:
        t = net.tensors[tid]
        if t.ndim != 2:
            continue
        ps = [partners.get((tid, leg)) for leg in t.legs]
        if any(p is None or p not in plane_set for p in ps):
            continue
        c = 2 * np.array(net.coords[tid])
        if np.array_equal(c, np.array(net.coords[ps[0]]) + np.array(net.coords[ps[1]])):
            edge_tids.add(tid)
    site_of = {}
    site_legs = {}
    for tid in tids:
        if tid in edge_tids:
            continue
        t = net.tensors[tid]
        down, up, inplane = [], [], []
        for leg in t.legs:
            p = partners.get((tid, leg))
            if p is None:
                if open_vertical and leg.startswith("dn"):
                    down.append(leg)
                elif open_vertical and leg.startswith("up"):
                    up.append(leg)
                else:
                    raise ValueError(f"unexpected open leg {leg!r} in layer")
            else:
                pa = net.coords[p][0]
                if pa == a:
                    inplane.append(leg)
                elif (pa < a) != reverse:
                    down.append(leg)
                else:
                    up.append(leg)
        pos = tuple(net.coords[tid])[1:]
        if pos in site_of:
            raise ValueError(f"two site tensors at plane {a} position {pos}")
        site_of[pos] = tid
        site_legs[tid] = (down, up, inplane)
    # one gate per in-plane connection (through an edge tensor or direct)
    raw_gates = []
    consumed = set()
    for pos in sorted(site_of):
        tid = site_of[pos]
        for leg in site_legs[tid][2]:
            if (tid, leg) in consumed:
                continue
            p = partners[(tid, leg)]
            if p in edge_tids:
                et = net.tensors[p]
                other = [l for l in et.legs if partners[(p, l)] != tid]
                if not other:
                    other = [l for l in et.legs if l != leg]
                ol = other[0]
                t2 = partners[(p, ol)]
                emat = et.densify()
                if et.legs.index(leg) == 1:
                    emat = emat.T
                raw_gates.append((len(raw_gates), tid, leg, t2, ol, emat))
                consumed.add((t2, ol))
            else:
                raw_gates.append((len(raw_gates), tid, leg, p, leg, None))
                consumed.add((p, leg))
            consumed.add((tid, leg))
    residuals = {}
    factors = {}
    for pos in sorted(site_of):
        tid = site_of[pos]
        t = net.tensors[tid]
        if force == "structured" and t.kind == "dense":
            raise ValueError("structured splitting requires parity/equality sites")
        if force == "svd" and t.kind != "dense":
            t = Tensor.dense(t.densify(), list(t.legs))
        down, up, inplane = site_legs[tid]
        arr, fac = _split_site(t, down, up, inplane, chi_split, cutoff)
        gkeys = []
        for leg in inplane:
            for key, t1, l1, t2, l2, _e in raw_gates:
                if (t1 == tid and l1 == leg) or (t2 == tid and l2 == leg):
                    gkeys.append(key)
                    break
        residuals[pos] = (arr, gkeys)
        factors[tid] = fac
    gates = []
    for key, t1, l1, t2, l2, emat in raw_gates:
        mat = _build_gate(factors[t1][l1], emat, factors[t2][l2],
                          net.tensors[t1].dim(l1))
        gates.append((key, tuple(net.coords[t1])[1:], tuple(net.coords[t2])[1:], mat))
    return GateSequence(residuals, gates)


def _single_plane(net):
    work = net.copy()
    partners = _partners(work)
    avals = {work.coords[tid][0] for tid in work.tensors}
    if len(avals) != 1:
        raise ValueError("layer must live in a single plane")
    return work, partners, avals.pop()


def split_layer_svd(net: TensorNetwork, chi_split: int,
                    cutoff: float = DEFAULT_CUTOFF) -> GateSequence:
    """SVD decomposition of a single-plane network into residuals and
    two-site gates, each split bond capped at chi_split.  Open vertical
    legs must be named 'dn*' / 'up*'."""
    work, partners, a = _single_plane(net)
    return _plan_plane(work, sorted(work.tensors), partners, a, chi_split,
                       cutoff, open_vertical=True, force="svd")


def split_layer_structured(net: TensorNetwork) -> GateSequence:
    """Exact decomposition of a plane of parity/equality nodes: sites keep
    their legs (identity splits) and edge tensors become gates."""
    work, partners, a = _single_plane(net)
    return _plan_plane(work, sorted(work.tensors), partners, a, 10 ** 9,
                       DEFAULT_CUTOFF, open_vertical=True, force="structured")


class SweepState:
    """2D carrier state for the 3D layer sweep.

    Site arrays have axes (left, right, down, up, vert); left/right step
    the first grid coordinate, down/up the second.  lam maps a lattice
    bond (ordered pair of positions) to a positive weight vector
    normalized to unit max; absent entries mean a trivial bond.
    """

    AXIS = {(-1, 0): 0, (1, 0): 1, (0, -1): 2, (0, 1): 3}

    def __init__(self, positions):
        self.sites = {pos: np.ones((1, 1, 1, 1, 1)) for pos in positions}
        self.lam = {}
        self.log_scale = 0.0
        self.truncation_cut = 0.0

    @staticmethod
    def bond(p1, p2):
        return (p1, p2) if p1 <= p2 else (p2, p1)

    def get_lam(self, p1, p2):
        return self.lam.get(self.bond(p1, p2), np.ones(1))

    def neighbors(self, pos):
        i, j = pos
        for (di, dj), ax in self.AXIS.items():
            yield (i + di, j + dj), ax

    def vert_dim(self, pos):
        return self.sites[pos].shape[4]

    def rescale(self, pos):
        m = np.max(np.abs(self.sites[pos]))
        if m > 0 and (m >= 2.0 or m < 1.0):
            e = math.floor(math.log2(m))
            self.sites[pos] = self.sites[pos] / 2.0 ** e
            self.log_scale += e * math.log(2.0)

    def _absorb_outer(self, pos, skip_axis, invert=False):
        A = self.sites[pos]
        for npos, ax in self.neighbors(pos):
            if ax == skip_axis or npos not in self.sites:
                continue
            lv = self.get_lam(pos, npos)
            if len(lv) == 1 and lv[0] == 1.0:
                continue
            w = 1.0 / lv if invert else lv
            shape = [1] * A.ndim
            shape[ax] = len(lv)
            A = A * w.reshape(shape)
        self.sites[pos] = A

    def apply_bond_gate(self, p1, p2, gate, chi, cutoff=DEFAULT_CUTOFF, fast=True):
        """Contract a two-site gate whose legs sit at axis 5 of both site
        arrays, merging it into the shared lattice bond (capped at chi).

        When the merged bond still fits under chi, the gate is absorbed
        exactly through its own SVD with no lattice-bond refactorization;
        otherwise a full simple-update step (outer-lambda absorption, QR
        reduction, bond SVD, truncation) runs.
        """
        delta = (p2[0] - p1[0], p2[1] - p1[1])
        if delta not in self.AXIS:
            raise ValueError("gate endpoints are not adjacent grid positions")
        ax1 = self.AXIS[delta]
        ax2 = self.AXIS[(-delta[0], -delta[1])]
        A1, A2 = self.sites[p1], self.sites[p2]
        lam_b = self.get_lam(p1, p2)
        nb = len(lam_b)
        gu, gs, gvt = np.linalg.svd(gate, full_matrices=False)
        if gs[0] == 0.0:
            raise FloatingPointError("zero-valued gate collapses the network")
        gkeep = gs > cutoff * gs[0]
        gu, gs, gvt = gu[:, gkeep], gs[gkeep], gvt[gkeep]
        if fast and nb * len(gs) <= chi:
            B1 = np.tensordot(A1, gu, axes=([5], [0]))
            B2 = np.tensordot(A2, gvt.T, axes=([5], [0]))
            for pos, B, ax in ((p1, B1, ax1), (p2, B2, ax2)):
                B = np.moveaxis(B, -1, ax + 1)
                sh = list(B.shape)
                sh[ax] *= sh[ax + 1]
                del sh[ax + 1]
                self.sites[pos] = B.reshape(sh)
            new_lam = np.kron(lam_b, gs)
            f = float(np.max(new_lam))
            self.lam[self.bond(p1, p2)] = new_lam / f
            self.log_scale += math.log(f)
            self.rescale(p1)
            self.rescale(p2)
            return
        self._absorb_outer(p1, ax1)
        self._absorb_outer(p2, ax2)
        A1, A2 = self.sites[p1], self.sites[p2]
        rest1 = [ax for ax in range(A1.ndim) if ax not in (ax1, 5)]
        rest2 = [ax for ax in range(A2.ndim) if ax not in (ax2, 5)]
        g1, g2 = A1.shape[5], A2.shape[5]
        M1 = np.transpose(A1, rest1 + [ax1, 5]).reshape(-1, A1.shape[ax1] * g1)
        M2 = np.transpose(A2, rest2 + [ax2, 5]).reshape(-1, A2.shape[ax2] * g2)
        Q1, R1 = _qr(M1, mode='economic', check_finite=False)
        Q2, R2 = _qr(M2, mode='economic', check_finite=False)
        R1 = R1.reshape(-1, A1.shape[ax1], g1)
        R2 = R2.reshape(-1, A2.shape[ax2], g2)
        core = np.einsum("abg,b,gh,cbh->ac", R1, lam_b, gate, R2, optimize=True)
        u, s, vt = _svd_trunc(core, chi, cutoff)
        if s[0] == 0.0:
            raise FloatingPointError("bond collapsed to zero during update")
        self.truncation_cut += float(
            1.0 - (s ** 2).sum() / max(np.linalg.norm(core) ** 2, 1e-300)
        )
        f = float(np.max(s))
        self.log_scale += math.log(f)
        keep = len(s)
        N1 = (Q1 @ u).reshape([A1.shape[ax] for ax in rest1] + [keep])
        self.sites[p1] = np.moveaxis(N1, N1.ndim - 1, ax1)
        N2 = (Q2 @ vt.T).reshape([A2.shape[ax] for ax in rest2] + [keep])
        self.sites[p2] = np.moveaxis(N2, N2.ndim - 1, ax2)
        self.lam[self.bond(p1, p2)] = s / f
        self._absorb_outer(p1, ax1, invert=True)
        self._absorb_outer(p2, ax2, invert=True)
        self.rescale(p1)
        self.rescale(p2)

    def to_network(self) -> TensorNetwork:
        """Readout: absorb sqrt(lambda) symmetrically into both endpoints
        of every bond and emit a closed 2D grid network."""
        net = TensorNetwork()
        net.log_scale = self.log_scale
        for pos in sorted(self.sites):
            A = self.sites[pos]
            if A.shape[4] != 1:
                raise ValueError("state still has an open vertical leg")
            A = A[..., 0]
            legs = []
            keep_axes = []
            for npos, ax in sorted(self.neighbors(pos), key=lambda t: t[1]):
                if npos in self.sites and (
                    A.shape[ax] > 1 or self.bond(pos, npos) in self.lam
                ):
                    lv = self.get_lam(pos, npos)
                    shape = [1] * A.ndim
                    shape[ax] = A.shape[ax]
                    A = A * np.sqrt(lv).reshape(shape)
                    legs.append(f"b{self.bond(pos, npos)}")
                    keep_axes.append(ax)
                elif A.shape[ax] != 1:
                    raise ValueError("dangling lattice bond in readout")
            A = A.reshape([A.shape[ax] for ax in keep_axes])
            net.add(Tensor.dense(A, legs), coord=pos)
        return net


def simple_update_apply(state: SweepState, p1, p2, gate: np.ndarray, chi: int,
                        cutoff: float = DEFAULT_CUTOFF) -> SweepState:
    """Apply a two-site gate to the vertical legs of adjacent sites.

    gate axes are (v1_in, v2_in, v1_out, v2_out); the state is updated in
    place with the shared lattice bond truncated to chi.
    """
    v1, v2 = state.vert_dim(p1), state.vert_dim(p2)
    if gate.shape[0] != v1 or gate.shape[1] != v2:
        raise ValueError("gate does not match the vertical leg dimensions")
    gmat = gate.transpose(0, 2, 1, 3).reshape(v1 * gate.shape[2],
                                              v2 * gate.shape[3])
    u, s, vt = _svd_trunc(gmat, min(gmat.shape), cutoff)
    k = len(s)
    G1 = (u * s).reshape(v1, gate.shape[2], k)
    G2 = vt.T.reshape(v2, gate.shape[3], k)
    state.sites[p1] = np.einsum("lrduv,vwg->lrduwg", state.sites[p1], G1,
                                optimize=True)
    state.sites[p2] = np.einsum("lrduv,vwg->lrduwg", state.sites[p2], G2,
                                optimize=True)
    state.apply_bond_gate(p1, p2, np.eye(k), chi, cutoff, fast=False)
    return state


def sweep_contract_3d(net: TensorNetwork, chi_peps: int, chi_split: int,
                      chi_mps: int, cutoff: float = DEFAULT_CUTOFF,
                      reverse: bool = False, seed: int = 709) -> ContractionValue:
    """Contract a layered 3D network by a plane-by-plane simple-update
    sweep along the first coordinate (top-down when reverse is set).

    Planes whose tensors all have exactly one leg down and one leg up to
    the same grid position are bond planes: their 2x2 matrices are folded
    exactly into the next layer's vertical step.  Every other plane is
    decomposed into residuals and gates; structured nodes split exactly,
    dense nodes by SVD at chi_split, and lattice bonds are truncated to
    chi_peps.  The remaining 2D network goes to the boundary MPS at
    chi_mps.
    """
    work = net.copy()
    simplify(work)
    if not work.tensors:
        return ContractionValue.from_float(1.0, work.log_scale)
    for tid in work.tensors:
        if tid not in work.coords or len(work.coords[tid]) != 3:
            raise ValueError("3D sweep needs 3D coordinates on every tensor")
    partners = _partners(work)
    planes: dict = {}
    for tid in work.tensors:
        planes.setdefault(work.coords[tid][0], []).append(tid)
    avals = sorted(planes, reverse=reverse)

    def is_bond_plane(tids, a):
        for tid in tids:
            t = work.tensors[tid]
            if t.ndim != 2:
                return False
            sides = set()
            for leg in t.legs:
                p = partners.get((tid, leg))
                if p is None or work.coords[p][0] == a:
                    return False
                if tuple(work.coords[p])[1:] != tuple(work.coords[tid])[1:]:
                    return False
                sides.add((work.coords[p][0] < a) != reverse)
            if sides != {True, False}:
                return False
        return True

    site_planes = []  # [a, GateSequence, bond-plane matrices attached above]
    for a in avals:
        tids = sorted(planes[a])
        if site_planes and is_bond_plane(tids, a):
            for tid in tids:
                t = work.tensors[tid]
                prev = [l for l in t.legs
                        if (work.coords[partners[(tid, l)]][0] < a) != reverse]
                order = prev + [l for l in t.legs if l not in prev]
                arr = np.transpose(t.densify(), [t.legs.index(l) for l in order])
                site_planes[-1][2][tuple(work.coords[tid])[1:]] = arr
        else:
            gs = _plan_plane(work, tids, partners, a, chi_split, cutoff, reverse)
            site_planes.append([a, gs, {}])

    positions = set()
    for _a, gs, above in site_planes:
        positions.update(gs.residuals)
        positions.update(above)
    # rank-compress the grid so stride-2 site lattices become unit grids
    brank = {v: i for i, v in enumerate(sorted({p[0] for p in positions}))}
    crank = {v: i for i, v in enumerate(sorted({p[1] for p in positions}))}

    def rpos(pos):
        return (brank[pos[0]], crank[pos[1]])

    for plane in site_planes:
        gs = plane[1]
        plane[1] = GateSequence(
            {rpos(p): v for p, v in gs.residuals.items()},
            [(key, rpos(p1), rpos(p2), mat) for key, p1, p2, mat in gs.gates],
        )
        plane[2] = {rpos(p): v for p, v in plane[2].items()}
    state = SweepState(sorted(rpos(p) for p in positions))
    state.log_scale = work.log_scale

    carry: dict = {}
    for _a, gs, above in site_planes:
        for pos in sorted(gs.residuals):
            arr, _gkeys = gs.residuals[pos]
            A = state.sites[pos]
            mat = carry.pop(pos, None)
            if mat is not None:
                A = np.tensordot(A, mat, axes=([4], [0]))
            if A.shape[4] != arr.shape[0]:
                raise ValueError(
                    f"vertical dimension mismatch at {pos}: "
                    f"{A.shape[4]} vs {arr.shape[0]}"
                )
            state.sites[pos] = np.tensordot(A, arr, axes=([4], [0]))
            state.rescale(pos)
        if carry:
            pos = next(iter(carry))
            raise ValueError(f"bond-plane matrix at {pos} has no site above")
        for pos in state.sites:
            if pos not in gs.residuals and state.sites[pos].shape[4] != 1:
                raise ValueError(f"open vertical leg at {pos} with no residual")
        pending = {pos: list(gs.residuals[pos][1]) for pos in gs.residuals}
        for key, p1, p2, mat in gs.gates:
            for pos in (p1, p2):
                idx = pending[pos].index(key)
                if idx != 0:
                    state.sites[pos] = np.moveaxis(state.sites[pos], 5 + idx, 5)
                    pending[pos].remove(key)
                    pending[pos].insert(0, key)
            state.apply_bond_gate(p1, p2, mat, chi_peps, cutoff)
            pending[p1].remove(key)
            pending[p2].remove(key)
        carry = dict(above)
    if carry:
        raise ValueError("bond plane beyond the last site plane")
    return mps_contract_2d(state.to_network(), chi_mps, cutoff, seed=seed)
