"""
Benchmark service: runs (benchmark x seed x router) cells, aggregates swap
counts into a report, and produces swaps-vs-gates scaling series
"""
import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
import sys

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from utils.logger import get_logger
from utils.errors import ConfigError

from routing.circuit import BENCHMARK_KINDS, LogicalCircuit, benchmark_width, generate_benchmark
from routing.topology import Topology

from .router_service import RouterService

logger = get_logger(__name__)

REPORT_COLUMNS = [
    "benchmark", "topology", "router", "mapping", "n_gates",
    "mean_swaps", "std_swaps", "n_samples", "mean_ms",
]
REFERENCE_ROUTER = RouterService.METHOD_SABRE


@dataclass
class BenchRow:
    benchmark: str
    topology: str
    router: str
    mapping: str
    n_gates: float
    mean_swaps: float
    std_swaps: float
    n_samples: int
    mean_ms: Optional[float] = None
    swap_ratio: Optional[float] = None


@dataclass
class BenchReport:
    rows: List[BenchRow] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"rows": [asdict(r) for r in self.rows]}, indent=2, sort_keys=True)

    def write_json(self, path):
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    def write_csv(self, path):
        """Write the report table to CSV"""
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS, extrasaction="ignore")
            writer.writeheader()
            for row in self.rows:
                writer.writerow(asdict(row))


@dataclass(frozen=True)
class _Cell:
    benchmark: str
    router: str
    seed: int


class BenchService:
    """Service for comparative routing benchmarks on one topology"""

    def __init__(self, topology: Topology, routers: Sequence[str], mapping: str = RouterService.MAPPING_TRIVIAL,
                 seed: int = 0, workers: int = 1, timing: bool = False, router_options: Optional[dict] = None):
        """
        Initialize benchmark service

        Args:
            topology: Coupling graph every circuit is routed on
            routers: Router method names (see RouterService.METHODS)
            mapping: Initial-mapping strategy for every cell
            seed: Base seed; sample i uses seed + i
            workers: Parallel workers for independent cells
            timing: Record wall-clock routing time (makes output nondeterministic)
            router_options: Extra keyword arguments for RouterService
        """
        if not routers:
            raise ConfigError("bench needs at least one router")
        if workers < 1:
            raise ConfigError(f"workers must be >= 1, got {workers}")
        for router in routers:
            if router not in RouterService.METHODS:
                raise ConfigError(f"unknown router {router!r}")
        self.topology = topology
        self.routers = list(routers)
        self.mapping = mapping
        self.seed = seed
        self.workers = workers
        self.timing = timing
        self.router_options = dict(router_options or {})
        logger.info(f"BenchService initialized: {topology.name}, routers={self.routers}, mapping={mapping}")

    def _circuit(self, kind: str, seed: int, params: dict) -> LogicalCircuit:
        return generate_benchmark(kind, benchmark_width(kind, self.topology.num_qubits), seed=seed, **params)

    def _run_cell(self, cell: _Cell, params: dict) -> Tuple[int, int, float]:
        circuit = self._circuit(cell.benchmark, cell.seed, params)
        service = RouterService(self.topology, cell.router, seed=cell.seed, **self.router_options)
        start = time.perf_counter()
        routed = service.route(circuit, self.mapping)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        return len(circuit), routed.swap_count, elapsed_ms

    def _run_cells(self, cells: List[_Cell], params: dict) -> List[Tuple[int, int, float]]:
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                return list(executor.map(lambda c: self._run_cell(c, params), cells))
        return [self._run_cell(c, params) for c in cells]

    def run(self, suite: Sequence[str], seeds: int, params: Optional[dict] = None) -> BenchReport:
        """
        Route every (benchmark, seed, router) cell and aggregate per (benchmark, router)

        Args:
            suite: Benchmark kinds
            seeds: Samples per benchmark
            params: Extra generator parameters (e.g. {"gates": 50} for random)

        Returns:
            BenchReport with rows sorted by benchmark then router
        """
        if seeds < 1:
            raise ConfigError(f"seeds must be >= 1, got {seeds}")
        for kind in suite:
            if kind not in BENCHMARK_KINDS:
                raise ConfigError(f"unknown benchmark {kind!r}")
        params = dict(params or {})
        cells = [_Cell(kind, router, self.seed + s) for kind in suite for router in self.routers for s in range(seeds)]
        results = self._run_cells(cells, params)

        grouped: Dict[Tuple[str, str], List[Tuple[int, int, float]]] = {}
        for cell, result in zip(cells, results):
            grouped.setdefault((cell.benchmark, cell.router), []).append(result)

        report = BenchReport()
        for (kind, router), samples in sorted(grouped.items()):
            gates = np.array([s[0] for s in samples], dtype=float)
            swaps = np.array([s[1] for s in samples], dtype=float)
            report.rows.append(BenchRow(
                benchmark=kind,
                topology=self.topology.name,
                router=router,
                mapping=self.mapping,
                n_gates=float(gates.mean()),
                mean_swaps=float(swaps.mean()),
                std_swaps=float(swaps.std()),
                n_samples=len(samples),
                mean_ms=float(np.mean([s[2] for s in samples])) if self.timing else None,
            ))
        self._add_swap_ratios(report)
        logger.info(f"Benchmark finished: {len(cells)} cells, {len(report.rows)} rows")
        return report

    @staticmethod
    def _add_swap_ratios(report: BenchReport):
        reference = {r.benchmark: r.mean_swaps for r in report.rows if r.router == REFERENCE_ROUTER}
        for row in report.rows:
            ref = reference.get(row.benchmark)
            if ref:
                row.swap_ratio = row.mean_swaps / ref

    def scaling_series(self, sizes: Sequence[int], seeds: int) -> dict:
        """
        Swap count versus gate count on random circuits, with a linear fit

        Args:
            sizes: Gate counts
            seeds: Samples per size

        Returns:
            {"topology", "series": {router: {"points", "slope", "intercept", "r"}}}
        """
        if len(sizes) < 2:
            raise ConfigError("scaling series needs at least two sizes")
        series = {}
        for router in self.routers:
            points = []
            for m in sizes:
                cells = [_Cell("random", router, self.seed + s) for s in range(seeds)]
                results = self._run_cells(cells, {"gates": m})
                points.append({"gates": m, "mean_swaps": float(np.mean([r[1] for r in results]))})
            x = np.array([p["gates"] for p in points], dtype=float)
            y = np.array([p["mean_swaps"] for p in points], dtype=float)
            slope, intercept = np.polyfit(x, y, 1)
            r = float(np.corrcoef(x, y)[0, 1]) if y.std() > 0 else 0.0
            series[router] = {"points": points, "slope": float(slope), "intercept": float(intercept), "r": r}
            logger.info(f"Scaling {router}: slope={slope:.4f} r={r:.4f}")
        return {"topology": self.topology.name, "mapping": self.mapping, "series": series}
