"""Smoke test for the kgsc extension: compile the running example, run it, check it."""

import json
import pathlib

import kgsc

DATA = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "data"


def main():
    c = kgsc.running_example()
    assert c.rule_count == 3

    assert "RemoteRequest" in c.pseudocode()
    source, manifest = c.solidity()
    assert "contract Contract1" in source
    assert json.loads(manifest)["functions"][0] == "process"
    assert kgsc.validate(c.bridge_json()) == []

    fixture = (DATA / "fixtures" / "eligible.json").read_text()
    matched, report, transcript = c.oracle_check(fixture)
    assert matched, report
    lines = [json.loads(l) for l in transcript.splitlines()]
    assert lines[-1]["entry"] == "EventEmitted"
    assert kgsc.execute(c.bridge_json(), fixture) == transcript

    for seed in range(20):
        ok, report, _ = c.oracle_check(c.generate_fixture(seed))
        assert ok, f"seed {seed}: {report}"

    try:
        kgsc.compile("{ ?a ?p ?b } => { ?a ?p ?b } .", (DATA.parent.parent / "data" / "insurance.ttl").read_text())
    except kgsc.KgscError as e:
        assert str(e).startswith("E_"), e
    else:
        raise AssertionError("variable predicate accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
