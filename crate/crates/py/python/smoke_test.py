"""Smoke test for the chaingather_py extension.

Build and install first, e.g. `pip install --no-build-isolation ./crates/py`.
"""

import json
import pathlib
import sys
import tempfile

import chaingather_py as cg


def main() -> int:
    chain = cg.Chain.generate("rectangle:10x10")
    assert len(chain) == 36, len(chain)
    assert chain.violations() == []
    assert not chain.is_gathered()

    report = cg.simulate(chain)
    summary = report.summary()
    assert report.gathered and report.within_bound(), summary
    assert report.invariant_failures() == []
    assert report.final_chain.is_gathered()

    square = cg.Chain([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert cg.simulate(square).rounds_used == 0

    cfg = 'gen = "octagon:side=24,stair=2,zigs=1,seed=0"\n'
    octagon = cg.run_config(cfg)
    s = octagon.summary()
    assert s["gathered"] and s["progress_pairs"] >= 1 and s["uncredited_pairs"] == 0, s

    with tempfile.TemporaryDirectory() as tmp:
        trace = pathlib.Path(tmp) / "trace.jsonl"
        octagon.write_trace(str(trace))
        replayed, same = cg.verify_trace(str(trace))
        assert same and replayed.rounds_used == octagon.rounds_used
        frames = octagon.render(str(pathlib.Path(tmp) / "frames"), every=10)
        assert frames and all(pathlib.Path(f).read_text().startswith("<svg") for f in frames)

    rows = cg.bench("random", [64], seeds=3)
    assert rows[0]["instances"] == 3 and rows[0]["max_ratio"] <= 27, rows

    try:
        cg.Chain.generate("random:n=201")
    except ValueError:
        pass
    else:
        raise AssertionError("odd random length accepted")

    print(json.dumps(summary))
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
