"""
Transaction latency as trading volume grows
===========================================

The second headline experiment: hold the population fixed and raise the
aggregate rate of digital-asset purchases. Validation is heavy compute, so
the cloud baseline collapses at high rates while the edge servers, each
validating only its own region's transactions, barely notice.
"""

from metafog import plot_series, sweep

config = {
    "experiment": {
        "horizon_ms": 120_000.0,
        "warmup_ms": 20_000.0,
        "tx_rate_sweep": [1, 5, 20, 50],
    },
}

results = sweep(config, "tx_rate", replications=1, parallel=True)

print(f"{'tx/s':>6} {'cloud tx ms':>14} {'fogedge tx ms':>14}")
for value, cloud_ms, fog_ms in plot_series(results, "tx_rate"):
    print(f"{value:>6g} {cloud_ms:>14.3f} {fog_ms:>14.3f}")

blocks = [r.extras["blocks_formed"] for r in results if r.policy == "fogedge"]
print(f"\nblocks formed per fog-edge scenario: {blocks}")
