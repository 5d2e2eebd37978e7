# benchmarks/config.py
#
# Single source of truth for benchmark parameters.
# All other benchmark scripts import from here.

import os

# ── Reproducibility ──────────────────────────────────────────────────────────
RANDOM_SEED = int(os.getenv("BENCHMARK_SEED", "42"))

# ── Fleet sizes to benchmark ─────────────────────────────────────────────────
# The largest size is the 1M driver-week target; run smaller sizes first
# to see the scaling on your machine.
FLEET_SIZES = [int(n) for n in os.getenv("BENCHMARK_FLEET_SIZES", "10000,100000,1000000").split(",")]

# ── Parallelism ──────────────────────────────────────────────────────────────
THREADS = int(os.getenv("BENCHMARK_THREADS", str(os.cpu_count() or 1)))
CHUNK_SIZE = int(os.getenv("BENCHMARK_CHUNK_SIZE", "5000"))

# ── Targets ──────────────────────────────────────────────────────────────────
# 1M driver-weeks in <= 120 s with peak RSS <= 4 GB on an 8-core desktop.
TARGET_DRIVERS = 1_000_000
TARGET_SECONDS = 120.0
TARGET_PEAK_MB = 4096.0

# A run is flagged as a regression when its wall clock or peak memory exceeds
# the stored baseline for the same fleet size by more than this fraction.
REGRESSION_THRESHOLD = 0.20

# ── Output ───────────────────────────────────────────────────────────────────
RESULTS_DIR = os.path.join(os.path.dirname(__file__), "results")
RESULTS_FILE = os.path.join(RESULTS_DIR, "results.csv")
BASELINE_FILE = os.getenv("BENCHMARK_BASELINE", os.path.join(RESULTS_DIR, "baseline.csv"))
