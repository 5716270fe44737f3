"""Smoke test for the cca_traffic Python extension.

Build the extension first:

    cargo build -p cca-traffic-py --release

The script imports an installed ``cca_traffic`` module if there is one,
otherwise it loads the freshly built library from target/release.
"""

import importlib.util
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    try:
        import cca_traffic

        return cca_traffic
    except ImportError:
        pass
    for name in ("libcca_traffic.so", "libcca_traffic.dylib", "cca_traffic.dll"):
        built = ROOT / "target" / "release" / name
        if built.exists():
            break
    else:
        sys.exit("extension not built: run `cargo build -p cca-traffic-py --release`")
    suffix = ".pyd" if built.suffix == ".dll" else ".so"
    staged = Path(tempfile.mkdtemp()) / f"cca_traffic{suffix}"
    shutil.copy(built, staged)
    found = importlib.util.spec_from_file_location("cca_traffic", staged)
    module = importlib.util.module_from_spec(found)
    found.loader.exec_module(module)
    return module


def main():
    ct = load()

    assert ct.triangular(-1.0, 0.0, 2.0, 1.0) == 0.5
    assert ct.gwaf([(1.0, [0.75])]) == 0.75
    assert ct.gwaf([(0.5, [-4.0]), (0.5, [2.0])]) == -1.0
    assert ct.combine(1.0, -2.0) == -0.5
    assert ct.combine(-1.0, 2.0) == -1.0

    cfg = ct.ExperimentConfig(
        emission_rate=1.0, lanes=2, road_length=800.0, iterations=60, repetitions=3, seed=5
    )
    again = ct.ExperimentConfig.from_toml(cfg.to_toml())
    assert again.to_toml() == cfg.to_toml()
    try:
        ct.ExperimentConfig(lanes=1)
    except ValueError:
        pass
    else:
        raise AssertionError("single-lane road accepted")

    sim = ct.Simulation(cfg, 0)
    for _ in range(30):
        sample = sim.step_and_sample()
    assert sim.time == 30 and sample["t"] == 30
    emitted, dropped, processed = sim.tally
    assert emitted - dropped - processed == sim.traffic_count() == sample["N"]
    cars = sim.vehicles()
    assert all(0 <= lane < 2 and 0.0 <= v for lane, _, _, _, v, _ in cars)
    for lane in range(2):
        xs = [x for l, _, _, x, _, _ in cars if l == lane]
        assert xs == sorted(xs)

    with tempfile.TemporaryDirectory() as out:
        reps = ct.run(cfg, threads=1, out=out)
        assert len(reps) == 3 and all(len(r) == 60 for r in reps)
        assert (Path(out) / "fundamental.svg").exists()
    assert reps == ct.run(cfg, threads=2)

    triples = [[(s["t"], s["D"], s["q"]) for s in r] for r in reps]
    cc = ct.cc_series(triples)
    assert all(-1.0 <= c <= 1.0 for _, c in cc if not math.isnan(c))
    bins = ct.diagram(triples, lanes=2)
    assert sum(b[1] for b in bins) == 180

    print("python smoke test passed")


if __name__ == "__main__":
    main()
