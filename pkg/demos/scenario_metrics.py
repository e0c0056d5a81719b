"""Scenario walkthrough: the packing-station script, end to end.

Runs the bundled four-bag scenario headlessly: bag 1 uses only seed
primitives, bag 2 teaches pack() and click-grounds the toy car, bags 3-4
reuse the taught vocabulary. Prints the per-bag metric curves, verifies
the log-recomputed metrics against the live accumulators, and replays the
persisted log to confirm determinism.
"""

import tempfile
from pathlib import Path

from sandbox.scenarios import (
    load_scenario,
    metrics_report,
    run_scenario,
    session_factory,
)
from sandbox.session import persist, record_key, resume


def main():
    config = load_scenario("gift_bags")
    session = run_scenario(config, session_id="gift_bags")
    report = metrics_report(session)

    print(f"scenario: {config['name']} "
          f"({len(config['events'])} scripted operator events)")
    print(f"final API version: {report['api_version']} "
          f"(taught: {session.metrics.teach_counts})\n")

    print(f"{'segment':>8} {'commands':>9} {'primitives':>11} "
          f"{'complexity':>11} {'failures':>9}")
    for name in ("bag1", "bag2", "bag3", "bag4"):
        seg = report["segments"][name]
        print(f"{name:>8} {seg['ok_commands']:>9} {seg['primitive_calls']:>11} "
              f"{seg['behavior_complexity']:>11.2f} {seg['skill_failures']:>9}")

    print(f"\nlog-recomputed metrics match accumulators: "
          f"{report['recompute_matches']}")
    print(f"supervision time: "
          f"{session.metrics.supervision_time_s:.1f} s over "
          f"{session.metrics.commands_spoken} commands")

    with tempfile.TemporaryDirectory() as tmp:
        log_path = Path(tmp) / "gift_bags.jsonl"
        persist(session, log_path)
        clone = resume(log_path, session_factory)
        identical = [record_key(r) for r in clone.records] == \
            [record_key(r) for r in session.records]
        print(f"\npersisted {len(session.records)} records; "
              f"replay reproduces them bit-for-bit: {identical}")


if __name__ == "__main__":
    main()
