"""Experiment runner: scenario generation, parameter sweeps, scheme comparison,
oracle gap checks, and CSV emission.

One command, three modes chosen by flags: `--sweep` averages total delay per
scheme over seeded realizations for each sweep point, `--oracle-check`
reports the solver-vs-exhaustive gap distribution on small instances, and the
default mode plans a single scenario and prints the per-task breakdown.  The
tool emits plot data (CSV), never images.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import oracle as oracle_mod
from .latency import task_delay
from .phy import DEFAULT_NUM_ANTENNAS, generate_channels, uplink_rates
from .scenario import Scenario, ScenarioSpec, Scheme, generate_scenario, load_scenario, save_scenario
from .solver import SolveResult, SolverConfig, solve

SWEEP_PARAMETERS = {
    "fl": "mecl_capacity_hz",
    "fh": "mech_capacity_hz",
    "bl": "fronthaul_capacity_hz",
    "bh": "midhaul_capacity_hz",
    "k": "num_users",
}

SWEEP_CSV_COLUMNS = (
    "sweep_param",
    "value",
    "scheme",
    "mean_total_delay_s",
    "stderr",
    "realizations",
    "infeasible_count",
)

ORACLE_CSV_COLUMNS = ("scheme", "realization", "seed", "solver_total_s", "oracle_total_s", "rel_gap")

# Fixed offset separating the channel stream from the scenario stream when
# both are derived from one realization seed.
_CHANNEL_SEED_SALT = 0x9E3779B97F4A7C15
_SEED_MASK = (1 << 64) - 1


def channel_seed(scenario_seed: int) -> int:
    return (int(scenario_seed) ^ _CHANNEL_SEED_SALT) & _SEED_MASK


def realization_seed(base_seed: int, realization: int) -> int:
    return (int(base_seed) ^ int(realization)) & _SEED_MASK


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter (fl, fh, bl, bh or k), its value grid, and how many
    seeded realizations to average per point."""

    parameter: str
    start: float
    stop: float
    steps: int
    realizations: int = 1
    base_seed: int = 0
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        name = self.parameter.strip().lower()
        if name not in SWEEP_PARAMETERS:
            raise ValueError(
                f"unknown sweep parameter '{self.parameter}' (expected one of {sorted(SWEEP_PARAMETERS)})"
            )
        object.__setattr__(self, "parameter", name)
        if self.steps < 2:
            raise ValueError("a sweep needs at least 2 steps")
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        if not (self.start > 0 and self.stop > 0):
            raise ValueError("sweep range must be strictly positive")

    def values(self) -> list[float]:
        grid = np.linspace(self.start, self.stop, self.steps)
        if self.parameter == "k":
            ints = np.rint(grid)
            if np.any(ints < 1):
                raise ValueError("user counts in a sweep must be at least 1")
            return [float(v) for v in ints]
        return [float(v) for v in grid]


def _spec_for_point(base: ScenarioSpec, sweep: SweepSpec, value: float, seed: int) -> ScenarioSpec:
    field_name = SWEEP_PARAMETERS[sweep.parameter]
    if field_name == "num_users":
        return dataclasses.replace(base, num_users=int(value), seed=seed)
    return dataclasses.replace(base, **{field_name: value}, seed=seed)


def evaluate_realization(
    spec: ScenarioSpec,
    schemes: tuple[Scheme, ...],
    config: SolverConfig,
    num_antennas: int = DEFAULT_NUM_ANTENNAS,
) -> dict[Scheme, float]:
    """Generate scenario + channels from the spec's seed, plan under each
    scheme, and return total delays (inf marks an infeasible realization)."""
    scenario = generate_scenario(spec)
    channels = generate_channels(
        scenario.topology,
        scenario.ru_positions_m,
        scenario.user_positions_m,
        seed=channel_seed(spec.seed),
        num_antennas=num_antennas,
    )
    rates = uplink_rates(scenario.topology, channels)
    out = {}
    for scheme in schemes:
        result = solve(scenario.topology, scenario.tasks, rates, scheme, config)
        out[scheme] = result.total_delay_s
    return out


def _sweep_cell(args) -> tuple[int, int, dict]:
    point_idx, realization, spec, schemes, config, num_antennas = args
    totals = evaluate_realization(spec, schemes, config, num_antennas)
    return point_idx, realization, {s.name: v for s, v in totals.items()}


def run_sweep(
    sweep: SweepSpec,
    schemes: tuple[Scheme, ...],
    base: ScenarioSpec,
    config: SolverConfig | None = None,
    num_antennas: int = DEFAULT_NUM_ANTENNAS,
    workers: int = 1,
) -> list[dict]:
    """Mean total delay per (sweep point, scheme), averaged over realizations.

    Realization r always uses seed base_seed xor r, for every sweep point, so
    points share random draws and curves differ only through the swept value.
    Infeasible realizations (a user with zero rate) are counted and excluded
    from the mean.  Output row order and content are deterministic.
    """
    config = config or SolverConfig()
    base = dataclasses.replace(base, **sweep.overrides) if sweep.overrides else base
    values = sweep.values()
    cells = [
        (p, r, _spec_for_point(base, sweep, value, realization_seed(sweep.base_seed, r)), tuple(schemes), config, num_antennas)
        for p, value in enumerate(values)
        for r in range(sweep.realizations)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_cell, cells, chunksize=1))
    else:
        outcomes = [_sweep_cell(cell) for cell in cells]

    by_cell = {(p, r): totals for p, r, totals in outcomes}
    rows = []
    for p, value in enumerate(values):
        for scheme in schemes:
            totals = [by_cell[(p, r)][scheme.name] for r in range(sweep.realizations)]
            feasible = [v for v in totals if math.isfinite(v)]
            n = len(feasible)
            mean = sum(feasible) / n if n else math.inf
            stderr = float(np.std(feasible, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
            rows.append(
                {
                    "sweep_param": sweep.parameter,
                    "value": value,
                    "scheme": scheme.cli_name,
                    "mean_total_delay_s": mean,
                    "stderr": stderr,
                    "realizations": sweep.realizations,
                    "infeasible_count": sweep.realizations - n,
                }
            )
    return rows


def _csv_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def format_csv(rows: list[dict], columns: tuple[str, ...]) -> str:
    lines = [",".join(columns)]
    lines.extend(",".join(_csv_cell(row[col]) for col in columns) for row in rows)
    return "\n".join(lines) + "\n"


def compare_oracle(
    base: ScenarioSpec,
    schemes: tuple[Scheme, ...],
    realizations: int,
    config: SolverConfig | None = None,
    num_antennas: int = DEFAULT_NUM_ANTENNAS,
    cap: int = oracle_mod.DEFAULT_ENUMERATION_CAP,
) -> tuple[list[dict], list[dict]]:
    """Relative solver-vs-exhaustive gap per realization, plus per-scheme
    median/p95/max summary rows."""
    config = config or SolverConfig()
    rows = []
    for r in range(realizations):
        seed = realization_seed(base.seed, r)
        spec = dataclasses.replace(base, seed=seed)
        scenario = generate_scenario(spec)
        channels = generate_channels(
            scenario.topology,
            scenario.ru_positions_m,
            scenario.user_positions_m,
            seed=channel_seed(seed),
            num_antennas=num_antennas,
        )
        rates = uplink_rates(scenario.topology, channels)
        for scheme in schemes:
            result = solve(scenario.topology, scenario.tasks, rates, scheme, config)
            truth = oracle_mod.enumerate_optimal(scenario.topology, scenario.tasks, rates, scheme, cap=cap)
            gap = (result.total_delay_s - truth.total_delay_s) / truth.total_delay_s
            rows.append(
                {
                    "scheme": scheme.cli_name,
                    "realization": r,
                    "seed": seed,
                    "solver_total_s": result.total_delay_s,
                    "oracle_total_s": truth.total_delay_s,
                    "rel_gap": gap,
                }
            )
    summaries = []
    for scheme in schemes:
        gaps = np.array([row["rel_gap"] for row in rows if row["scheme"] == scheme.cli_name])
        summaries.append(
            {
                "scheme": scheme.cli_name,
                "median_gap": float(np.median(gaps)),
                "p95_gap": float(np.percentile(gaps, 95)),
                "max_gap": float(np.max(gaps)),
                "realizations": realizations,
            }
        )
    return summaries, rows


def single_report(scenario: Scenario, rates, scheme: Scheme, result: SolveResult) -> str:
    """Human-readable plan: per-task path, shares and delay legs, then totals."""
    topo, tasks = scenario.topology, scenario.tasks
    lines = [
        f"scheme={scheme.cli_name} users={topo.num_users} rus={topo.num_rus} dus={topo.num_dus}",
        "task ru du tier rate_mbps speed_ghz fronthaul_mhz midhaul_mhz access_s fronthaul_s midhaul_s compute_s total_s",
    ]
    alloc = result.allocation
    for k, tier in enumerate(result.decision.tiers):
        ru = int(topo.user_to_ru[k])
        du = int(topo.ru_to_du[ru])
        breakdown = task_delay(topo, tasks, k, tier, alloc, rates[k])
        speed = alloc.mecl_speed.get(k) or alloc.mech_speed.get(k) or alloc.cloud_speed.get(k)
        lines.append(
            f"{k} {ru} {du} {tier} "
            f"{rates[k] / 1e6:.6g} {speed / 1e9:.6g} "
            f"{alloc.fronthaul_bw.get(k, 0.0) / 1e6:.6g} {alloc.midhaul_bw.get(k, 0.0) / 1e6:.6g} "
            f"{breakdown.access_s:.6g} {breakdown.fronthaul_s:.6g} {breakdown.midhaul_s:.6g} "
            f"{breakdown.compute_s:.6g} {breakdown.total_s:.6g}"
        )
    lines.append(
        f"total_delay_s={result.total_delay_s:.9g} tasks={topo.num_users} "
        f"iterations={result.iterations} converged={result.converged} "
        f"duality_gap={result.duality_gap:.3g}"
    )
    lines.append(
        "duals: mu=[" + " ".join(f"{v:.6g}" for v in result.duals.mu) + "]"
        + " lam=[" + " ".join(f"{v:.6g}" for v in result.duals.lam) + "]"
        + f" rho={result.duals.rho:.6g}"
        + " nu=[" + " ".join(f"{v:.6g}" for v in result.duals.nu) + "]"
        + " xi=[" + " ".join(f"{v:.6g}" for v in result.duals.xi) + "]"
    )
    return "\n".join(lines) + "\n"


def _parse_sweep_flag(text: str) -> tuple[str, float, float, int]:
    try:
        name, _, rng = text.partition("=")
        start, stop, steps = rng.split(":")
        return name.strip(), float(start), float(stop), int(steps)
    except ValueError as exc:
        raise ValueError(f"--sweep expects NAME=START:STOP:STEPS, got {text!r}") from exc


def _parse_set_flag(entries: list[str]) -> dict:
    fields = {
        "fl": "mecl_capacity_hz",
        "fh": "mech_capacity_hz",
        "bl": "fronthaul_capacity_hz",
        "bh": "midhaul_capacity_hz",
        "fc": "cloud_capacity_hz",
        "uplink": "uplink_bandwidth_hz",
        "rl": "fronthaul_se",
        "rh": "midhaul_se",
        "spacing": "ru_spacing_m",
    }
    overrides = {}
    for entry in entries:
        key, _, value = entry.partition("=")
        key = key.strip().lower()
        if key not in fields:
            raise ValueError(f"--set expects one of {sorted(fields)}, got {key!r}")
        parts = [float(tok) for tok in value.split(",")]
        overrides[fields[key]] = parts[0] if len(parts) == 1 else (parts[0], parts[1])
    return overrides


def _schemes_from_flag(flag: str) -> tuple[Scheme, ...]:
    if flag == "all":
        return (Scheme.FOG, Scheme.CLOUD_RU, Scheme.CLOUD_DU, Scheme.CLOUD)
    return (Scheme.from_name(flag),)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fogplan",
        description="Plan computational task offloading in a three-tier fog C-RAN and "
        "reproduce delay-vs-capacity sweeps.",
    )
    parser.add_argument("--scenario", help="load a scenario file instead of generating one")
    parser.add_argument("--seed", type=int, default=0, help="base seed (scenario generation / sweeps)")
    parser.add_argument("--users", type=int, help="number of users K (required when generating)")
    parser.add_argument("--dus", type=int, default=4, help="number of DUs")
    parser.add_argument("--rus", type=int, default=10, help="number of RUs")
    parser.add_argument("--antennas", type=int, default=DEFAULT_NUM_ANTENNAS, help="receive antennas per RU")
    parser.add_argument(
        "--scheme",
        default="all",
        choices=["fog", "cloud", "cloud-du", "cloud-ru", "all"],
        help="which tier restriction(s) to plan under",
    )
    parser.add_argument("--sweep", help="sweep one parameter: fl|fh|bl|bh|k=START:STOP:STEPS")
    parser.add_argument("--realizations", type=int, default=1, help="random realizations per sweep point")
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    parser.add_argument("--oracle-check", action="store_true", help="compare the solver against exhaustive search")
    parser.add_argument("--oracle-cap", type=int, default=oracle_mod.DEFAULT_ENUMERATION_CAP, help="enumeration cap")
    parser.add_argument("--epsilon", type=float, default=1e-4, help="solver convergence threshold")
    parser.add_argument("--max-iters", type=int, default=2000, help="solver iteration cap")
    parser.add_argument("--workers", type=int, default=1, help="parallel workers for sweeps")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a scenario parameter (fl, fh, bl, bh, fc, uplink, rl, rh, spacing); "
                        "VALUE may be 'lo,hi' for a per-node uniform draw")
    parser.add_argument("--save-scenario", help="write the generated scenario to this path")
    return parser


def _base_spec(args) -> ScenarioSpec:
    if args.users is None:
        raise ValueError("--users is required when generating scenarios")
    overrides = _parse_set_flag(args.set)
    return ScenarioSpec(
        num_users=args.users,
        num_dus=args.dus,
        num_rus=args.rus,
        seed=args.seed,
        **overrides,
    )


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = SolverConfig(epsilon=args.epsilon, max_iters=args.max_iters)
    schemes = _schemes_from_flag(args.scheme)

    try:
        if args.sweep:
            name, start, stop, steps = _parse_sweep_flag(args.sweep)
            sweep = SweepSpec(
                parameter=name,
                start=start,
                stop=stop,
                steps=steps,
                realizations=args.realizations,
                base_seed=args.seed,
            )
            rows = run_sweep(sweep, schemes, _base_spec(args), config, args.antennas, args.workers)
            _emit(format_csv(rows, SWEEP_CSV_COLUMNS), args.out)
            return 0

        if args.oracle_check:
            summaries, rows = compare_oracle(
                _base_spec(args), schemes, args.realizations, config, args.antennas, args.oracle_cap
            )
            for s in summaries:
                sys.stdout.write(
                    f"scheme={s['scheme']} realizations={s['realizations']} "
                    f"median_gap={s['median_gap']:.3e} p95_gap={s['p95_gap']:.3e} "
                    f"max_gap={s['max_gap']:.3e}\n"
                )
            if args.out:
                _emit(format_csv(rows, ORACLE_CSV_COLUMNS), args.out)
            return 0

        if args.scenario:
            scenario = load_scenario(args.scenario)
        else:
            scenario = generate_scenario(_base_spec(args))
        if args.save_scenario:
            save_scenario(args.save_scenario, scenario)
        channels = generate_channels(
            scenario.topology,
            scenario.ru_positions_m,
            scenario.user_positions_m,
            seed=channel_seed(args.seed),
            num_antennas=args.antennas,
        )
        rates = uplink_rates(scenario.topology, channels)
        reports = []
        for scheme in schemes:
            result = solve(scenario.topology, scenario.tasks, rates, scheme, config)
            reports.append(single_report(scenario, rates, scheme, result))
        _emit("".join(reports), args.out)
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
