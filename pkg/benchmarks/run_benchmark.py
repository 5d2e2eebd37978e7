# benchmarks/run_benchmark.py
#
# End-to-end streaming benchmark: synthetic generation, battery assignment,
# charging simulation, flexibility quantification and national aggregation.
# Peak memory is sampled with psutil over the parent and its worker processes.
#
# Usage:
#   BENCHMARK_LABEL=local BENCHMARK_FLEET_SIZES=10000,1000000 \
#   PYTHONPATH=$(pwd) python benchmarks/run_benchmark.py

import os
import sys
import threading
import time

import psutil

sys.path.insert(0, os.path.dirname(__file__))
from config import (
    BASELINE_FILE, CHUNK_SIZE, FLEET_SIZES, RANDOM_SEED, REGRESSION_THRESHOLD,
    RESULTS_FILE, TARGET_DRIVERS, TARGET_PEAK_MB, TARGET_SECONDS, THREADS,
)
from csv_writer import append_result, read_baseline

from evflex.core.config import RunConfig
from evflex.schemas.fleet import Season
from evflex.schemas.report import RegionalProfile
from evflex.services.aggregation import peak_kw
from evflex.services.pipeline import run_streaming


class PeakMemorySampler:
    """Samples RSS of this process plus its children until stopped."""

    def __init__(self, interval: float = 0.2):
        self.interval = interval
        self.peak_bytes = 0
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _sample(self) -> int:
        proc = psutil.Process()
        total = proc.memory_info().rss
        for child in proc.children(recursive=True):
            try:
                total += child.memory_info().rss
            except psutil.NoSuchProcess:
                pass
        return total

    def _run(self) -> None:
        while not self._stop.is_set():
            self.peak_bytes = max(self.peak_bytes, self._sample())
            self._stop.wait(self.interval)

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        self._thread.join()
        self.peak_bytes = max(self.peak_bytes, self._sample())

    @property
    def peak_mb(self) -> float:
        return self.peak_bytes / (1024 * 1024)


def run_once(drivers: int) -> dict:
    base = RunConfig()
    config = base.model_copy(update={"synthetic": base.synthetic.model_copy(update={"driver_count": drivers})})

    with PeakMemorySampler() as memory:
        t0 = time.perf_counter()
        result = run_streaming(config, RANDOM_SEED, Season.WINTER, threads=THREADS,
                               chunk_size=CHUNK_SIZE, progress=True)
        national = RegionalProfile.combine(result.accumulator.profiles().values())
        total_s = time.perf_counter() - t0

    return {
        "drivers": drivers,
        "threads": THREADS,
        "chunk_size": CHUNK_SIZE,
        "total_s": round(total_s, 2),
        "drivers_per_s": round(drivers / total_s, 1) if total_s > 0 else None,
        "peak_rss_mb": round(memory.peak_mb, 1),
        "charging_events": result.diagnostics.charging_events,
        "envelopes": result.envelopes,
        "infeasible_drivers": len(result.diagnostics.infeasible_drivers),
        "national_weekday_peak_kw": round(peak_kw(national, "weekday"), 1),
    }


def check(summary: dict, baseline: dict[int, dict]) -> None:
    n = summary["drivers"]
    if n == TARGET_DRIVERS:
        summary["within_target"] = (summary["total_s"] <= TARGET_SECONDS
                                    and summary["peak_rss_mb"] <= TARGET_PEAK_MB)
    ref = baseline.get(n)
    if ref:
        limit = 1.0 + REGRESSION_THRESHOLD
        slower = summary["total_s"] > float(ref["total_s"]) * limit
        bigger = summary["peak_rss_mb"] > float(ref["peak_rss_mb"]) * limit
        summary["regression"] = slower or bigger


def main():
    print("=" * 55)
    print("  Streaming fleet benchmark")
    print(f"  threads={THREADS}  chunk_size={CHUNK_SIZE}")
    print("=" * 55)
    baseline = read_baseline(BASELINE_FILE)
    regressions = 0

    for n in FLEET_SIZES:
        print(f"\n  Fleet size: {n:,}")
        summary = run_once(n)
        check(summary, baseline)
        print(f"  total={summary['total_s']}s  peak={summary['peak_rss_mb']}MB  "
              f"events={summary['charging_events']:,}  envelopes={summary['envelopes']:,}")
        if summary.get("within_target") is False:
            print(f"  [target] missed: {TARGET_SECONDS}s / {TARGET_PEAK_MB}MB")
        if summary.get("regression"):
            print(f"  [regression] more than {REGRESSION_THRESHOLD:.0%} over baseline")
            regressions += 1
        append_result(RESULTS_FILE, summary)

    print(f"\nAll done. Results: {RESULTS_FILE}")
    return 1 if regressions else 0


if __name__ == "__main__":
    sys.exit(main())
