import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

import matplotlib
import numpy as np
from matplotlib.figure import Figure

logger = logging.getLogger(__name__)

# 同じ入力から同じ SVG を得るための固定値
SVG_HASH_SALT = "outer-billiard-lab"


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return value.as_posix()
    if hasattr(value, "to_json"):
        return value.to_json()
    raise TypeError(f"JSON に変換できない値です: {type(value).__name__}")


def dumps(payload: Any) -> str:
    return json.dumps(payload, default=_to_builtin, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


class ReportWriter:

    def __init__(self, output_dir: Path) -> None:
        self._output_dir = output_dir

    @property
    def output_dir(self) -> Path:
        return self._output_dir

    def create_directory_if_not_exist(self) -> None:
        if not self._output_dir.exists():
            self._output_dir.mkdir(parents=True)
            logger.info(f"ディレクトリを作成しました: {self._output_dir}")

    def resolve(self, path: Path) -> Path:
        # 相対パスは出力ディレクトリ基準
        return path if path.is_absolute() else self._output_dir / path

    def write_json(self, path: Path, payload: dict[str, Any]) -> Path:
        target = self._prepare(path)
        target.write_text(dumps(payload), encoding="utf-8")
        logger.info(f"レポートを書き出しました: {target}")
        self._log_summary(payload)
        return target

    def write_csv(self, path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        target = self._prepare(path)
        with open(target, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_format_cell(cell) for cell in row])
        logger.info(f"CSV を書き出しました: {target}")
        return target

    def write_svg(self, path: Path, figure: Figure) -> Path:
        target = self._prepare(path)
        with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "path"}):
            figure.savefig(target, format="svg", metadata={"Date": None})
        logger.info(f"図を書き出しました: {target}")
        return target

    def _prepare(self, path: Path) -> Path:
        target = self.resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    @staticmethod
    def _log_summary(payload: dict[str, Any]) -> None:
        logger.info("===== 結果サマリー =====")
        for key in sorted(payload):
            value = payload[key]
            if isinstance(value, bool | int | str):
                logger.info(f"{key}: {value}")
            elif isinstance(value, float | np.floating):
                logger.info(f"{key}: {float(value):.6e}")
        logger.info("========================")


def _format_cell(cell: Any) -> Any:
    if isinstance(cell, float | np.floating):
        return repr(float(cell))
    if isinstance(cell, np.integer):
        return int(cell)
    return cell
