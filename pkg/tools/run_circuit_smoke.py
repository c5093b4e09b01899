"""Monte Carlo smoke run for the compressed circuit-level memory model.

Pipeline per scaling factor: scale the d=3 rotated-layout detector error
model, compress at chi 16, truncate every bond to 8, then decode 2000
sampled shots with the 3D sweep at (chi_peps, chi_split, chi_mps) =
(12, 8, 64).  chi_split 8 matches the truncated bond cap, so splitting
dense site tensors during the sweep is exact and the only approximations
are the compression itself and the chi_peps/chi_mps caps.  Results
accumulate in results/circuit_smoke.json so the
acceptance suite can check monotonicity without re-running the campaign.
"""
import argparse
import json
import os
import time

from tndecode.dem import compress_dem, parse_dem
from tndecode.harness import ContractionConfig, DemProblem, logical_error_rate

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)

PARAMS = {
    "dem": "tests/data/rotated_d3.dem",
    "scalings": [0.2, 0.5, 1.0],
    "shots": 2000,
    "seed": 777,
    "chi_compress": 16,
    "chi_truncate": 8,
    "chi_peps": 12,
    "chi_split": 8,
    "chi_mps": 64,
}


def run(out_path):
    base = parse_dem(open(os.path.join(ROOT, PARAMS["dem"])).read())
    cfg = ContractionConfig(
        engine="sweep", chi_peps=PARAMS["chi_peps"],
        chi_split=PARAMS["chi_split"], chi_mps=PARAMS["chi_mps"],
    )
    rows = []
    if os.path.exists(out_path):
        old = json.load(open(out_path))
        if old.get("params") == PARAMS:
            rows = old["rows"]
    done = {r["scale"] for r in rows}
    for scale in PARAMS["scalings"]:
        if scale in done:
            continue
        state = compress_dem(base.scaled(scale), PARAMS["chi_compress"])
        state.truncate_all(PARAMS["chi_truncate"])
        problem = DemProblem(
            state.model,
            network_builder=lambda mdl, m, ports, s=state: s.decoding_network(m, ports),
        )
        t0 = time.time()
        rec = logical_error_rate(problem, PARAMS["shots"], PARAMS["seed"], cfg)
        rows.append({"scale": scale, "shots": rec.shots,
                     "failures": rec.failures, "seconds": time.time() - t0})
        with open(out_path, "w") as f:
            json.dump({"params": PARAMS, "rows": rows}, f, indent=2)
        print(f"scale {scale}: {rec.failures}/{rec.shots} "
              f"({time.time() - t0:.0f}s)", flush=True)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(ROOT, "results/circuit_smoke.json"))
    args = ap.parse_args()
    run(args.out)
