"""
RightSize Studio - Main Entry Point
Command-line front end for the right-sizing solvers

    python src/main.py validate instance.json
    python src/main.py solve instance.json [--cost-only] [--out schedule.csv]
    python src/main.py approx instance.json --epsilon 0.5 | --gamma 2
    python src/main.py online instance.json --alg a|b|c [--epsilon E] [--audit]
    python src/main.py verify [instance.json] [--random N --seed S]
    python src/main.py gen --T 24 --d 2 --m 4 --seed 7 --profile sinusoidal
    python src/main.py compare instance.json --out report.csv [--per-slot-out slots.csv]

결과(스케줄, 리포트, 인스턴스)는 stdout/파일, 로그는 stderr.
종료 코드: 0 성공, 1 솔버/입출력 오류 또는 검증 실패, 2 잘못된 사용법.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent))

from config import __version__, settings
from approximation import solve_approx
from benchmark import ComparisonRunner, frame_to_csv, verify_instance, verify_random
from exceptions import RightSizingError, UsageError
from instance_io import dump_instance, format_schedule, load_instance, save_instance
from model import validate_instance
from offline_solver import solve_offline
from online_algorithms import ALGORITHMS, run_online
from workload import WORKLOAD_PROFILES, generate_instance

LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>"
)


def setup_logging(verbose: bool = False):
    """stderr 싱크 + (log_dir 설정 시) 일 단위 회전 파일"""
    logger.remove()
    level = "DEBUG" if verbose else settings.log_level
    logger.add(sys.stderr, format=LOG_FORMAT, level=level)
    if settings.log_dir:
        logger.add(
            str(Path(settings.log_dir) / "rightsize_{time:YYYY-MM-DD}.log"),
            rotation="1 day",
            retention="30 days",
            level="INFO",
            format=LOG_FORMAT
        )


def _emit(text: str, out: Optional[str] = None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"📁 저장: {out}")
    else:
        sys.stdout.write(text)


def _epsilon_list(text: Optional[str]) -> List[float]:
    if text is None:
        return settings.epsilons
    try:
        values = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad --epsilons value '{text}'")
    if not values or any(not e > 0 for e in values):
        raise UsageError(f"--epsilons needs positive values, got '{text}'")
    return values


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def cmd_validate(args) -> int:
    report = validate_instance(load_instance(args.file))
    print(report)
    return 0 if report.ok else 1


def cmd_solve(args) -> int:
    instance = load_instance(args.file)
    solution = solve_offline(instance, cost_only=args.cost_only)
    if args.cost_only:
        _emit(f"{solution.dp_cost:.9f}\n", args.out)
    else:
        _emit(format_schedule(solution.schedule, solution.breakdown), args.out)
    logger.info(str(solution))
    return 0


def cmd_approx(args) -> int:
    instance = load_instance(args.file)
    solution = solve_approx(instance, epsilon=args.epsilon, gamma=args.gamma, audit=args.audit)
    _emit(format_schedule(solution.schedule, solution.breakdown), args.out)
    logger.info(str(solution))
    if args.audit and not solution.within_bound:
        logger.error(f"❌ 근사 보장 위반 (OPT {solution.reference_cost:.9f})")
        return 1
    return 0


def cmd_online(args) -> int:
    if args.alg.lower() == "c" and args.epsilon is None:
        raise UsageError("--alg c needs --epsilon")
    instance = load_instance(args.file)
    result = run_online(instance, args.alg, epsilon=args.epsilon, audit=args.audit, gamma=args.gamma)
    _emit(format_schedule(result.schedule, result.breakdown), args.out)
    if args.audit:
        sys.stdout.write("\n")
        sys.stdout.write(
            "algorithm,epsilon,total,opt,ratio,bound,violation\n"
            f"{result.algorithm},{'' if result.epsilon is None else f'{result.epsilon:g}'},"
            f"{result.cost:.9f},{result.opt_cost:.9f},{result.ratio:.9f},{result.bound:.9f},"
            f"{int(result.violation)}\n"
        )
        if result.violation:
            return 1
    return 0


def cmd_verify(args) -> int:
    if args.file is None and args.random is None:
        raise UsageError("verify needs an instance file or --random N")
    if args.file is not None:
        summary = verify_instance(load_instance(args.file), label=args.file, resolution=args.resolution)
    else:
        summary = verify_random(args.random, args.seed, resolution=args.resolution)
    print(summary)
    return 0 if summary.passed else 1


def cmd_gen(args) -> int:
    logger.info(f"🎲 seed={args.seed} profile={args.profile}")
    instance = generate_instance(
        T=args.T, d=args.d, m=args.m, seed=args.seed, profile=args.profile,
        time_dependent=args.time_dependent, varying_fleet=args.varying_fleet
    )
    if args.out:
        save_instance(instance, args.out)
        logger.info(f"📁 인스턴스 저장: {args.out}")
    else:
        sys.stdout.write(dump_instance(instance))
    return 0


def cmd_compare(args) -> int:
    instance = load_instance(args.file)
    runner = ComparisonRunner(instance, epsilons=_epsilon_list(args.epsilons), timing=args.timing)
    reports = runner.run()
    if args.out:
        runner.save(args.out, args.per_slot_out)
    else:
        sys.stdout.write(frame_to_csv(runner.report_frame()))
    return 1 if any(r.violation for r in reports) else 0


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rightsize",
        description="Right-sizing heterogeneous data centers: offline, approximate and online schedules"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("file")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("solve", help="optimal offline schedule")
    p.add_argument("file")
    p.add_argument("--cost-only", action="store_true", help="keep one DP layer, print the cost only")
    p.add_argument("--out", help="write the schedule CSV here instead of stdout")
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("approx", help="(1+eps)-approximate offline schedule")
    p.add_argument("file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--epsilon", type=float)
    group.add_argument("--gamma", type=float)
    p.add_argument("--audit", action="store_true", help="also solve exactly and check the bound")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_approx)

    p = sub.add_parser("online", help="stream the instance through an online algorithm")
    p.add_argument("file")
    p.add_argument("--alg", required=True, choices=ALGORITHMS)
    p.add_argument("--epsilon", type=float, help="required for --alg c")
    p.add_argument("--gamma", type=float, help="run the prefix optimizer on a gamma grid (heuristic)")
    p.add_argument("--audit", action="store_true", help="report the ratio against the offline optimum")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_online)

    p = sub.add_parser("verify", help="cross-check solvers against brute-force references")
    p.add_argument("file", nargs="?")
    p.add_argument("--random", type=int, metavar="N", help="verify N seeded tiny instances")
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--resolution", type=int, default=None, help="grid-search resolution N")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("gen", help="write a seeded synthetic instance")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--profile", choices=list(WORKLOAD_PROFILES), default="sinusoidal")
    p.add_argument("--time-dependent", action="store_true", help="idle costs follow a price curve")
    p.add_argument("--varying-fleet", action="store_true", help="maintenance windows shrink the fleet")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_gen)

    p = sub.add_parser("compare", help="run every applicable solver and write a CSV report")
    p.add_argument("file")
    p.add_argument("--out", help="report CSV (stdout when omitted)")
    p.add_argument("--per-slot-out", help="per-slot trajectory CSV")
    p.add_argument("--epsilons", help="comma-separated epsilon list")
    p.add_argument("--timing", action="store_true", help="add a wall_time column")
    p.set_defaults(handler=cmd_compare)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        return args.handler(args)
    except UsageError as e:
        logger.error(f"❌ {e}")
        return 2
    except RightSizingError as e:
        logger.error(f"❌ {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
