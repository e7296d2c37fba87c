
import sys
import os
import time

# Add project root and tests to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
sys.path.insert(0, os.path.dirname(__file__))

from app.discovery import run_discovery
from app.oracle import brute_force_lumpings
from chains import THREE_STATE_LUMPINGS, EIGHT_STATE_LUMPINGS, three_state_chain, eight_state_chain
from core.chain import Partition, validate_stochastic


def report(label, ok):
    print(f"  {'✅' if ok else '❌'} {label}: {'PASS' if ok else 'FAIL'}")
    return ok


def run_simulation():
    print("🚀 Starting Known Lumpings Check...\n")
    results = []

    # Scenario 1: the eight-state chain with degenerate eigenvalues
    print("--- Scenario 1: Eight-state chain ---")
    P = validate_stochastic(eight_state_chain())
    expected = sorted(EIGHT_STATE_LUMPINGS, key=Partition.sort_key)

    start = time.perf_counter()
    truth = brute_force_lumpings(P)
    elapsed = time.perf_counter() - start
    print(f"  -> Oracle: {len(truth)} lumpings out of 4140 partitions in {elapsed:.3f}s")
    results.append(report("Oracle finds the ten known lumpings", truth == expected))

    discovery = run_discovery(P)
    for candidate in discovery.candidates:
        rotated = [g for g in candidate.generating_set if g.rotated]
        note = f" (rotated in {len(rotated)} group(s))" if rotated else ""
        print(f"     {candidate.partition}{note}")
    for warning in discovery.warnings:
        print(f"  ⚠️  {warning}")
    results.append(report("Discovery finds the ten known lumpings", discovery.partitions == expected))

    # Scenario 2: the parametric three-state chain
    print("\n--- Scenario 2: Three-state chain (a=0.3, b=0.2, c=0.5) ---")
    P = validate_stochastic(three_state_chain(0.3, 0.2, 0.5))
    found = run_discovery(P).partitions
    for part in found:
        print(f"     {part}")
    results.append(report("Three lumpings found", found == THREE_STATE_LUMPINGS))
    results.append(report("Oracle agrees", brute_force_lumpings(P) == THREE_STATE_LUMPINGS))

    print(f"\n{sum(results)}/{len(results)} checks passed")
    return all(results)


if __name__ == "__main__":
    sys.exit(0 if run_simulation() else 1)
