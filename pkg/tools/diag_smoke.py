"""Diagnose decode-stage accuracy of the circuit smoke pipeline.

For each scaling, build the chi16 -> truncate8 artifact and decode the
same sampled shots under several sweep configs, counting failures and
disagreements against a high-chi reference on the *same* artifact.
"""
import os
import time

from tndecode.dem import compress_dem, parse_dem
from tndecode.harness import ContractionConfig, DemProblem, _decide, sample_errors

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)

SHOTS = 300
SEED = 777
CONFIGS = {
    "split4": ContractionConfig(engine="sweep", chi_peps=12, chi_split=4, chi_mps=64),
    "split8": ContractionConfig(engine="sweep", chi_peps=12, chi_split=8, chi_mps=64),
    "ref": ContractionConfig(engine="sweep", chi_peps=24, chi_split=12, chi_mps=128),
}


def main():
    base = parse_dem(open(os.path.join(ROOT, "tests/data/rotated_d3.dem")).read())
    for scale in (0.2, 0.5, 1.0):
        state = compress_dem(base.scaled(scale), 16)
        state.truncate_all(8)
        problem = DemProblem(
            state.model,
            network_builder=lambda mdl, m, ports, s=state: s.decoding_network(m, ports),
        )
        shots = list(sample_errors(problem, SHOTS, SEED))
        decisions = {}
        for name, cfg in CONFIGS.items():
            t0 = time.time()
            decisions[name] = [_decide(problem, m, cfg) for _cls, m in shots]
            fails = sum(d != c for d, (c, _m) in zip(decisions[name], shots))
            print(f"scale {scale} {name}: fails {fails}/{SHOTS} "
                  f"({time.time()-t0:.0f}s)", flush=True)
        for name in ("split4", "split8"):
            dis = sum(a != b for a, b in zip(decisions[name], decisions["ref"]))
            print(f"scale {scale} {name} vs ref: {dis}/{SHOTS} disagree", flush=True)


if __name__ == "__main__":
    main()
