import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from src.acceptance import SUITES, run_suite
from src.birkhoff import bracket_growth_report
from src.config import Config, Tolerances, load_config, resolve_config_path
from src.discrete import DiscreteState, deformed_polygon, legal_moves, rotate_sequence, rotation_start
from src.errors import ConfigError, InvalidParameterError, OuterBilliardError
from src.figures import family_figure, identity_figure, orbit_figure, path_figure, rotation_figure, rounded_square_figure
from src.geometry import Polygon, is_nondegenerate
from src.horizontal import circle_baseline_constant, reconstruct_table, shoot, verify_periodic_family
from src.periodicity import (
    find_periodic,
    identity_example,
    iterate_orbit,
    obstruction_demo,
    rotation_number,
    rounded_square_demo,
)
from src.report import ReportWriter
from src.schema import load_curve, load_polygon, load_table, table_to_json
from src.table import ConvexTable, PiecewiseArcsTable, SupportFourierTable
from src.triangle import build_family, circumscribed_orbit, seeded_curve, solve_monodromy3, verify_family
from src.util import IterationEvent, TextFileDataSource, Timer, on_solver_iteration

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

# 構成したテーブル上での周期軌道の閉合誤差の上限
FAMILY_CLOSURE_TOL = 1e-5
FAMILY_AREA_TOL = 1e-6

FIGURES = """--svg で書き出す図 (コマンド: 図の内容):
  orbit           テーブル境界と T の軌道の点列
  periodic        テーブル境界と周期軌道の閉じた多角形
  construct3      構成したテーブルと外接する3周期三角形 (12個)
  construct       水平曲線に沿った多角形の族
  identity3       正三角形と反射に使う3つの円
  rounded-square  丸い正方形と4周期軌道、軌道点のまわりの円板
  rotate-polygon  正多角形の頂点と回転する三角形の各手
  rank, verify    図なし (--csv で表を書き出す)
"""


def _point(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"座標は x,y の形式で指定してください: {text}") from e
    return x, y


def _indices(text: str) -> tuple[int, int, int]:
    try:
        i, j, k = (int(v) for v in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"頂点番号は i,j,k の形式で指定してください: {text}") from e
    return i, j, k


@dataclass(frozen=True)
class Context:
    args: argparse.Namespace
    config: Config
    tolerances: Tolerances
    writer: ReportWriter

    @property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.config.seed)

    def report_path(self) -> Path:
        return self.args.out or Path(f"{self.args.command}.json")

    def write_report(self, payload: dict[str, object]) -> Path:
        # 実効的な許容誤差を必ず添える
        return self.writer.write_json(self.report_path(), {**payload, "tolerances": self.tolerances.model_dump()})


class Command(Protocol):
    def execute(self, context: Context) -> bool: ...


def _load_table(path: Path | None) -> ConvexTable:
    if path is None:
        return SupportFourierTable.circle()
    return load_table(TextFileDataSource(path))


def _write_optional(context: Context, figure_factory, rows_factory=None, header: Sequence[str] = ()) -> None:
    if context.args.svg is not None:
        context.writer.write_svg(context.args.svg, figure_factory())
    if context.args.csv is not None and rows_factory is not None:
        context.writer.write_csv(context.args.csv, header, rows_factory())


class OrbitCommand:

    def execute(self, context: Context) -> bool:
        args = context.args
        table = _load_table(args.table)
        points = iterate_orbit(table, args.start, args.steps)
        context.write_report(
            {
                "table": table_to_json(table),
                "start": list(args.start),
                "steps": args.steps,
                "points": points,
                "return_distance": float(np.linalg.norm(points[-1] - points[0])),
            },
        )
        _write_optional(
            context,
            lambda: orbit_figure(table, points),
            lambda: ([i, *p] for i, p in enumerate(points)),
            ("step", "x", "y"),
        )
        return True


class PeriodicCommand:

    def execute(self, context: Context) -> bool:
        args = context.args
        table = _load_table(args.table)
        seed = args.seed or (1.0 / np.cos(args.k * np.pi / args.n), 0.0)
        report = find_periodic(table, args.n, args.k, seed, tol=context.tolerances.closure)
        context.write_report({"table": table_to_json(table), "orbit": report})
        closed = np.vstack([report.points, report.points[:1]])
        _write_optional(
            context,
            lambda: orbit_figure(table, closed),
            lambda: ([i, *p] for i, p in enumerate(report.points)),
            ("index", "x", "y"),
        )
        return True


class RankCommand:

    def execute(self, context: Context) -> bool:
        args = context.args
        rng = context.rng
        rows = []
        for n in range(args.n_min, args.n_max + 1):
            ranks = []
            for _ in range(args.samples):
                polygon = Polygon(rng.normal(size=(n, 2)))
                while not is_nondegenerate(polygon, 1e-3):
                    polygon = Polygon(rng.normal(size=(n, 2)))
                ranks.append(bracket_growth_report(polygon, tol=context.tolerances.rank).rank)
            rows.append({"n": n, "expected": 2 * n - 1, "min_rank": min(ranks), "max_rank": max(ranks)})
            logger.info(f"n={n}: 階数 {min(ranks)}〜{max(ranks)} (期待値 {2 * n - 1})")
        passed = all(row["min_rank"] == row["expected"] == row["max_rank"] for row in rows)
        context.write_report({"passed": passed, "sweep": rows, "samples": args.samples})
        if args.csv is not None:
            context.writer.write_csv(
                args.csv,
                ("n", "expected", "min_rank", "max_rank"),
                ([r["n"], r["expected"], r["min_rank"], r["max_rank"]] for r in rows),
            )
        return passed


class Construct3Command:

    def execute(self, context: Context) -> bool:
        args = context.args
        config, tolerances = context.config, context.tolerances
        curve = load_curve(TextFileDataSource(args.curve)) if args.curve else seeded_curve(context.rng, args.norm)
        solution = solve_monodromy3(curve, tol=tolerances.monodromy3, points=config.quadrature_points)
        family = build_family(solution.curve, points=config.quadrature_points, tol=tolerances.monodromy3)
        verification = verify_family(
            family,
            args.samples,
            representation=args.representation,
            harmonics=config.max_harmonics,
            fit_tol=tolerances.fit,
        )
        passed = family.convex and verification.closure_max < FAMILY_CLOSURE_TOL
        context.write_report(
            {
                "passed": passed,
                "curve": solution.curve,
                "newton_history": list(solution.history),
                "convex": family.convex,
                "closure_max": verification.closure_max,
                "midpoint_max": verification.midpoint_max,
                "area_spread": verification.area_spread,
                "area_ratio": verification.area_ratio,
                "table": table_to_json(verification.table),
            },
        )
        indices = np.linspace(0, family.t.size, 12, endpoint=False).astype(int)
        _write_optional(
            context,
            lambda: family_figure(family.traced, [circumscribed_orbit(family, int(i)) for i in indices], "3-periodic family"),
            lambda: ([t, *p] for t, p in zip(family.t, family.traced)),
            ("t", "x", "y"),
        )
        return passed


class ConstructCommand:

    def execute(self, context: Context) -> bool:
        args = context.args
        config, tolerances = context.config, context.tolerances
        seed = args.amplitude * circle_baseline_constant(args.n, args.k) * context.rng.normal(size=(args.n, 4))
        result = shoot(args.n, args.k, seed, steps=config.integration_steps, tol=tolerances.shoot, degeneracy_tol=tolerances.degeneracy)
        reconstructed = reconstruct_table(result.path)
        family = verify_periodic_family(
            reconstructed,
            result.path,
            args.samples,
            representation=args.representation,
            harmonics=config.max_harmonics,
            fit_tol=tolerances.fit,
        )
        passed = (
            reconstructed.convex
            and family.closure_max < FAMILY_CLOSURE_TOL
            and family.area_spread < FAMILY_AREA_TOL
        )
        context.write_report(
            {
                "passed": passed,
                "n": args.n,
                "k": args.k,
                "controls": result.controls,
                "shoot_history": list(result.history),
                "convex": reconstructed.convex,
                "closure_max": family.closure_max,
                "area_spread": family.area_spread,
                "representation": family.representation,
                "table": table_to_json(family.table),
            },
        )
        _write_optional(
            context,
            lambda: path_figure(result.path),
            lambda: ([i, *p] for i, p in enumerate(reconstructed.points)),
            ("index", "x", "y"),
        )
        return passed


class Identity3Command:

    def execute(self, context: Context) -> bool:
        example = identity_example()
        obstruction = obstruction_demo()
        passed = example.differential_error < 1e-6 and obstruction.certified
        context.write_report(
            {
                "passed": passed,
                "triangle": example.triangle,
                "closure_error": example.closure_error,
                "differential": example.differential,
                "differential_error": example.differential_error,
                "matrix_product_error": example.matrix_product_error,
                "obstruction": {
                    "params": obstruction.params,
                    "residuals": obstruction.residuals,
                    "derivative": obstruction.derivative,
                    "zero_only_at_symmetric": obstruction.zero_only_at_symmetric,
                    "even": obstruction.even,
                },
            },
        )
        _write_optional(
            context,
            lambda: identity_figure(example),
            lambda: zip(obstruction.params, obstruction.residuals),
            ("param", "residual"),
        )
        return passed


class RoundedSquareCommand:

    def execute(self, context: Context) -> bool:
        args = context.args
        report = rounded_square_demo(
            args.side_radius,
            args.disk_radius,
            half_side=args.half_side,
            grid=args.grid,
            tol=context.tolerances.closure,
        )
        table = PiecewiseArcsTable.rounded_square(args.half_side, args.side_radius)
        passed = report.fraction == 1.0
        context.write_report(
            {
                "passed": passed,
                "table": table_to_json(table),
                "periodic_point": report.periodic_point,
                "orbit": report.orbit,
                "rotation_number": rotation_number(table, report.orbit),
                "disk_radius": report.disk_radius,
                "fraction": report.fraction,
            },
        )
        _write_optional(
            context,
            lambda: rounded_square_figure(table, report),
            lambda: ([i, *p] for i, p in enumerate(report.orbit)),
            ("step", "x", "y"),
        )
        return passed


class RotatePolygonCommand:

    def execute(self, context: Context) -> bool:
        args = context.args
        tolerance = context.tolerances.parallel
        if args.polygon is not None:
            host = load_polygon(TextFileDataSource(args.polygon))
        else:
            host = Polygon.regular(3 * args.n + 1)
            if args.deform:
                host = deformed_polygon(host, args.n, args.deform)
        triangle = args.triangle or rotation_start(args.n)
        state = DiscreteState(host, triangle)
        report = rotate_sequence(state, args.max_moves, tol=tolerance)
        context.write_report(
            {
                "passed": report.completed,
                "host": host,
                "start": list(state.triangle),
                "initial_moves": len(legal_moves(state, tolerance)),
                "moves": [[int(m.slot), m.source, m.target] for m in report.moves],
                "relabeled_at": report.relabeled_at,
                "exact_at": report.exact_at,
                "stuck": report.stuck,
            },
        )
        _write_optional(
            context,
            lambda: rotation_figure(report),
            lambda: ([i, *s.triangle] for i, s in enumerate(report.states)),
            ("move", "a", "b", "c"),
        )
        return report.completed


class VerifyCommand:

    def execute(self, context: Context) -> bool:
        names = list(SUITES) if context.args.suite == "all" else context.args.suite.split(",")
        unknown = [name for name in names if name not in SUITES]
        if unknown:
            raise ConfigError(f"不明な検査名です: {', '.join(unknown)}")
        results = run_suite(
            names,
            seed=context.config.seed,
            tolerances=context.tolerances,
            steps=context.config.integration_steps,
        )
        passed = all(r.passed for r in results)
        context.write_report({"passed": passed, "seed": context.config.seed, "checks": results})
        if context.args.csv is not None:
            context.writer.write_csv(context.args.csv, ("check", "passed"), ([r.name, r.passed] for r in results))
        return passed


COMMANDS: dict[str, Command] = {
    "orbit": OrbitCommand(),
    "periodic": PeriodicCommand(),
    "rank": RankCommand(),
    "construct3": Construct3Command(),
    "construct": ConstructCommand(),
    "identity3": Identity3Command(),
    "rounded-square": RoundedSquareCommand(),
    "rotate-polygon": RotatePolygonCommand(),
    "verify": VerifyCommand(),
}


class ApplicationInitializer:

    def __init__(self) -> None:
        self._logger = self.setup_basic_logging()

    @property
    def logger(self) -> logging.Logger:
        return self._logger

    @staticmethod
    def setup_basic_logging() -> logging.Logger:
        logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stdout)
        return logging.getLogger()

    @staticmethod
    def build_parser() -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--config", type=Path, help="設定ファイル (TOML)")
        common.add_argument("--debug", action="store_true", help="デバッグモードを有効にする")
        common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="許容誤差を上書きする")
        common.add_argument("--out", type=Path, help="JSON レポートの出力先")
        common.add_argument("--svg", type=Path, help="SVG 図の出力先")
        common.add_argument("--csv", type=Path, help="CSV の出力先")

        parser = argparse.ArgumentParser(
            prog="outer-billiard-lab",
            description="外部ビリヤードと周期点の不変曲線をもつテーブルの構成",
            epilog=FIGURES,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        commands = parser.add_subparsers(dest="command", required=True)

        orbit = commands.add_parser("orbit", parents=[common], help="軌道を反復する")
        orbit.add_argument("--table", type=Path, help="テーブルの JSON (省略時は単位円)")
        orbit.add_argument("--start", type=_point, default=(2.0, 0.0))
        orbit.add_argument("--steps", type=int, default=12)

        periodic = commands.add_parser("periodic", parents=[common], help="周期軌道を求める")
        periodic.add_argument("--table", type=Path)
        periodic.add_argument("--n", type=int, default=3)
        periodic.add_argument("--k", type=int, default=1)
        periodic.add_argument("--seed", type=_point, help="Newton 法の初期点")

        rank = commands.add_parser("rank", parents=[common], help="括弧積の階数を調べる")
        rank.add_argument("--n-min", type=int, default=3)
        rank.add_argument("--n-max", type=int, default=8)
        rank.add_argument("--samples", type=int, default=100)

        construct3 = commands.add_parser("construct3", parents=[common], help="3周期点の族からテーブルを構成する")
        construct3.add_argument("--curve", type=Path, help="曲線の JSON (省略時は乱数で摂動)")
        construct3.add_argument("--norm", type=float, default=0.05)
        construct3.add_argument("--samples", type=int, default=12)
        construct3.add_argument("--representation", choices=("fourier", "spline"), default="spline")

        construct = commands.add_parser("construct", parents=[common], help="(n, k) 周期点の族からテーブルを構成する")
        construct.add_argument("--n", type=int, default=5)
        construct.add_argument("--k", type=int, default=1)
        construct.add_argument("--amplitude", type=float, default=0.02)
        construct.add_argument("--samples", type=int, default=50)
        construct.add_argument("--representation", choices=("fourier", "spline"), default="spline")

        commands.add_parser("identity3", parents=[common], help="恒等微分の例と障害の計算")

        rounded = commands.add_parser("rounded-square", parents=[common], help="丸い正方形の4周期点")
        rounded.add_argument("--side-radius", type=float, default=5.0)
        rounded.add_argument("--disk-radius", type=float, default=0.05)
        rounded.add_argument("--half-side", type=float, default=1.0)
        rounded.add_argument("--grid", type=int, default=21)

        rotate = commands.add_parser("rotate-polygon", parents=[common], help="多角形内の三角形を回転させる")
        rotate.add_argument("--n", type=int, default=2, help="正 (3n+1) 角形を使う")
        rotate.add_argument("--polygon", type=Path, help="外側の多角形の JSON")
        rotate.add_argument("--triangle", type=_indices, help="初期三角形の頂点番号")
        rotate.add_argument("--deform", type=float, default=0.0, help="アフィンでない変形の大きさ")
        rotate.add_argument("--max-moves", type=int, default=200)

        verify = commands.add_parser("verify", parents=[common], help="受け入れ検査を実行する")
        verify.add_argument("--suite", default="all", help=f"all または {','.join(SUITES)} のカンマ区切り")
        return parser

    def parse_args(self, argv: Sequence[str] | None) -> argparse.Namespace:
        return self.build_parser().parse_args(argv)


def log_iteration(event: IterationEvent) -> None:
    logger.debug(f"{event.solver}: 反復 {event.iteration}, 残差 {event.residual:.3e}")


class Application:

    def __init__(self, initializer: ApplicationInitializer, argv: Sequence[str] | None = None) -> None:
        self._logger = initializer.logger
        self._args = initializer.parse_args(argv)

    def run(self) -> int:
        try:
            config = load_config(resolve_config_path(self._args.config))
            tolerances = config.tolerances.override(self._args.tol)
        except ConfigError as e:
            self._logger.error(str(e))
            return EXIT_CONFIG
        self._setup_detailed_logging(config, self._args.debug)
        self._logger.info(f"=== {self._args.command} 開始 ===")

        writer = ReportWriter(config.output_dir)
        writer.create_directory_if_not_exist()
        context = Context(args=self._args, config=config, tolerances=tolerances, writer=writer)
        try:
            with on_solver_iteration.listening(log_iteration), Timer() as elapsed:
                passed = COMMANDS[self._args.command].execute(context)
        except (ConfigError, InvalidParameterError) as e:
            self._logger.error(str(e))
            return EXIT_CONFIG
        except OSError as e:
            self._logger.error(f"入力ファイルを読み込めません: {e}")
            return EXIT_CONFIG
        except OuterBilliardError as e:
            self._logger.error(f"{type(e).__name__}: {e}")
            return EXIT_FAILED

        self._logger.info(f"すべての処理が完了しました。総処理時間: {elapsed():.2f}秒")
        if not passed:
            self._logger.error("検証に失敗しました")
            return EXIT_FAILED
        return EXIT_OK

    @staticmethod
    def _setup_detailed_logging(config: Config, debug: bool) -> logging.Logger:
        # ロガーをリセット
        for handler in logging.root.handlers[:]:
            logging.root.removeHandler(handler)
            handler.close()

        level = logging.DEBUG if debug else logging.INFO
        logging.basicConfig(
            level=level,
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            filename=config.log_file,
            filemode="a",
            encoding="utf-8",
        )

        console = logging.StreamHandler(sys.stdout)
        console.setLevel(level)
        console.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
        logging.getLogger().addHandler(console)

        logger = logging.getLogger()
        if debug:
            logger.info("デバッグモードが有効です")
        return logger


def run(argv: Sequence[str] | None = None) -> int:
    initializer = ApplicationInitializer()
    try:
        app = Application(initializer, argv)
    except SystemExit as e:
        return int(e.code or 0)
    return app.run()


def main() -> None:
    sys.exit(run())
