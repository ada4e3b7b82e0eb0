"""
A first simulation run
======================

Simulate 200 metaverse users for two simulated minutes under each placement
policy and print where the time goes. Every run is fully determined by
(config, seed): run this script twice and the numbers repeat exactly.
"""

from metafog import run_scenario

config = {
    "workload": {"user_count": 200},
    "experiment": {"horizon_ms": 120_000.0, "warmup_ms": 20_000.0},
}

for policy in ("cloud", "fogedge"):
    result = run_scenario(config, policy, seed=42)
    overall = result.stats["overall"]
    print(f"\n=== policy {policy} ===")
    print(f"records {overall.count}, mean {overall.mean_us / 1000:.3f} ms, "
          f"p95 {overall.p95_us / 1000:.3f} ms, p99 {overall.p99_us / 1000:.3f} ms")
    for kind in ("spatial_navigation", "collision_detection", "social_interaction",
                 "transaction_validation", "universe_simulation"):
        s = result.stats[kind]
        if s.count:
            print(f"  {kind:24s} n={s.count:6d} mean={s.mean_us / 1000:9.3f} ms")
    extras = result.extras
    print(f"tasks generated {extras['tasks_generated']}, in flight at horizon "
          f"{extras['in_flight_at_horizon']}, blocks formed {extras['blocks_formed']}")
