#!/usr/bin/env python3
"""Generate a flattened detector error model for a rotated surface code
memory experiment under uniform circuit-level depolarizing noise.

The circuit is the standard syndrome-extraction schedule: per round, data
depolarization, H on X-ancillas, four CX layers in a hook-protecting
zigzag order, H, measure + reset of ancillas; a final transversal data
measurement closes the experiment.  Every noise location (1- and 2-qubit
depolarizing after Cliffords, bit flips after resets and before
measurements) is propagated through the remaining circuit as a Pauli
frame; faults with identical (detector set, observable) symptoms are
merged with the independent-XOR convolution.

    python3 tools/make_rotated_dem.py --d 3 --rounds 3 --p 0.01 --out x.dem
"""
import argparse
from collections import defaultdict


def build_layout(d):
    span = 2 * d
    data = [(x, y) for x in range(1, span, 2) for y in range(1, span, 2)]
    xanc, zanc = [], []
    for i in range(d + 1):
        for j in range(d + 1):
            x, y = 2 * i, 2 * j
            touches = [
                (x + dx, y + dy)
                for dx in (-1, 1)
                for dy in (-1, 1)
                if (x + dx, y + dy) in set(data)
            ]
            if not touches:
                continue
            interior = 1 <= i <= d - 1 and 1 <= j <= d - 1
            is_x = (i + j) % 2 == 0
            if interior:
                (xanc if is_x else zanc).append((x, y))
            elif len(touches) == 2 and j in (0, d) and is_x:
                xanc.append((x, y))  # X-type boundary rows top/bottom
            elif len(touches) == 2 and i in (0, d) and not is_x:
                zanc.append((x, y))  # Z-type boundary columns left/right
    return data, sorted(xanc), sorted(zanc)


def build_circuit(d, rounds):
    """Sequence of ops plus noise sites.

    Ops: ("H", q), ("CX", a, b), ("M", q, key), ("R", q).
    Noise: ("DEP1"|"XE", (q,), weight) / ("DEP2", (a, b), 1) inserted inline.
    """
    data, xanc, zanc = build_layout(d)
    circuit = []

    def dep1(q):
        circuit.append(("DEP1", (q,)))

    def xe(q):
        circuit.append(("XE", (q,)))

    # zigzag CX schedules: X-ancillas sweep N before S, Z-ancillas E before W,
    # so hook errors align with the matching boundary of each type
    x_order = [(1, 1), (-1, 1), (1, -1), (-1, -1)]
    z_order = [(1, 1), (1, -1), (-1, 1), (-1, -1)]

    for q in data + xanc + zanc:
        circuit.append(("R", q))
        xe(q)
    mkey = 0
    meas = {}
    for t in range(rounds):
        for q in data:
            dep1(q)
        for q in xanc:
            circuit.append(("H", q))
            dep1(q)
        for layer in range(4):
            for a in xanc:
                dx, dy = x_order[layer]
                tq = (a[0] + dx, a[1] + dy)
                if tq in set(data):
                    circuit.append(("CX", a, tq))
                    circuit.append(("DEP2", (a, tq)))
            for a in zanc:
                dx, dy = z_order[layer]
                cq = (a[0] + dx, a[1] + dy)
                if cq in set(data):
                    circuit.append(("CX", cq, a))
                    circuit.append(("DEP2", (cq, a)))
        for q in xanc:
            circuit.append(("H", q))
            dep1(q)
        for q in xanc + zanc:
            xe(q)
            circuit.append(("M", q, mkey))
            meas[(q, t)] = mkey
            mkey += 1
        if t < rounds - 1:
            for q in xanc + zanc:
                circuit.append(("R", q))
                xe(q)
    for q in data:
        xe(q)
        circuit.append(("M", q, mkey))
        meas[(q, "final")] = mkey
        mkey += 1
    return circuit, meas, (data, xanc, zanc)


def build_detectors(d, rounds, meas, layout):
    data, xanc, zanc = layout
    detectors = []  # (measurement keys, coords)
    for a in zanc:
        detectors.append(([meas[(a, 0)]], (a[0] / 2, a[1] / 2, 0.0)))
    for t in range(1, rounds):
        for a in xanc + zanc:
            detectors.append(
                ([meas[(a, t)], meas[(a, t - 1)]], (a[0] / 2, a[1] / 2, float(t)))
            )
    for a in zanc:
        keys = [meas[(a, rounds - 1)]]
        for dx in (-1, 1):
            for dy in (-1, 1):
                q = (a[0] + dx, a[1] + dy)
                if q in set(data):
                    keys.append(meas[(q, "final")])
        detectors.append((keys, (a[0] / 2, a[1] / 2, float(rounds))))
    observable = [meas[(q, "final")] for q in data if q[1] == 1]
    return detectors, observable


def propagate(circuit, start, frame):
    """Measurement flips caused by a Pauli frame inserted before op `start`."""
    flips = set()
    frame = dict(frame)
    for op in circuit[start:]:
        if op[0] == "H":
            q = op[1]
            if q in frame:
                x, z = frame[q]
                frame[q] = (z, x)
        elif op[0] == "CX":
            _, c, t = op
            xc, zc = frame.get(c, (0, 0))
            xt, zt = frame.get(t, (0, 0))
            frame[t] = (xt ^ xc, zt)
            frame[c] = (xc, zc ^ zt)
        elif op[0] == "M":
            _, q, key = op
            if frame.get(q, (0, 0))[0]:
                flips.add(key)
        elif op[0] == "R":
            frame.pop(op[1], None)
    return flips


def enumerate_faults(circuit, p):
    """(probability, measurement-flip set) per elementary fault."""
    out = []
    for i, op in enumerate(circuit):
        if op[0] == "DEP1":
            q = op[1][0]
            for pauli in ((1, 0), (1, 1), (0, 1)):
                out.append((p / 3, propagate(circuit, i + 1, {q: pauli})))
        elif op[0] == "XE":
            q = op[1][0]
            out.append((p, propagate(circuit, i + 1, {q: (1, 0)})))
        elif op[0] == "DEP2":
            a, b = op[1]
            for pa in range(4):
                for pb in range(4):
                    if pa == pb == 0:
                        continue
                    # encode 0,1,2,3 -> I,X,Y,Z as (x,z) bits
                    enc = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}
                    frame = {}
                    if enc[pa] != (0, 0):
                        frame[a] = enc[pa]
                    if enc[pb] != (0, 0):
                        frame[b] = enc[pb]
                    out.append((p / 15, propagate(circuit, i + 1, frame)))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--rounds", type=int, default=3)
    ap.add_argument("--p", type=float, default=0.01)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    circuit, meas, layout = build_circuit(args.d, args.rounds)
    detectors, observable = build_detectors(args.d, args.rounds, meas, layout)
    obs_keys = set(observable)

    acc = defaultdict(float)
    for prob, flips in enumerate_faults(circuit, args.p):
        dets = tuple(
            sorted(
                i
                for i, (keys, _) in enumerate(detectors)
                if len(flips & set(keys)) % 2 == 1
            )
        )
        obs = (0,) if len(flips & obs_keys) % 2 == 1 else ()
        if not dets and not obs:
            continue
        key = (dets, obs)
        q = acc[key]
        acc[key] = q * (1 - prob) + prob * (1 - q)

    lines = []
    for (dets, obs), prob in sorted(acc.items()):
        targets = [f"D{i}" for i in dets] + [f"L{o}" for o in obs]
        lines.append(f"error({prob:.12g}) " + " ".join(targets))
    for i, (_, coords) in enumerate(detectors):
        cs = ", ".join(f"{c:g}" for c in coords)
        lines.append(f"detector({cs}) D{i}")
    lines.append("logical_observable L0")
    with open(args.out, "w") as f:
        f.write("\n".join(lines) + "\n")
    print(
        f"d={args.d} rounds={args.rounds}: {len(detectors)} detectors, "
        f"{len(acc)} merged mechanisms -> {args.out}"
    )


if __name__ == "__main__":
    main()
