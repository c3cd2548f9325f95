import csv
import logging
import os
from typing import Iterable, List, Mapping, Sequence

from bounds import REPORT_COLUMNS, BoundReport
from config_manager import ECHO_FILE_NAME, ExperimentConfig
from utils import BASE_DIR, format_number

REPORTS_FILE_NAME = "reports.csv"
SUMMARY_FILE_NAME = "summary.txt"


class OutputManager:
    """Writes the CSV, summary and config-echo files of one run into a single directory."""

    def __init__(self, output_dir: str) -> None:
        if not os.path.isabs(output_dir):
            output_dir = os.path.join(BASE_DIR, "..", output_dir)
        self.output_dir = os.path.realpath(output_dir)
        self._ensure_directory()

    def _ensure_directory(self) -> None:
        os.makedirs(self.output_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
        """
        Writes a CSV file with a header line.

        Numbers go through format_number, so identical results give byte-identical files.
        """
        target = self.path(name)
        count = 0
        with open(target, "w", newline="") as file:
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_render(value) for value in row])
                count += 1
        logging.info(f"[output] {count} rows -> {target}")
        return target

    def append_reports(self, reports: Sequence[BoundReport], name: str = REPORTS_FILE_NAME) -> str:
        """Appends bound reports, writing the header only when the file is new."""
        target = self.path(name)
        is_new = not os.path.exists(target) or os.path.getsize(target) == 0
        with open(target, "a", newline="") as file:
            writer = csv.writer(file, lineterminator="\n")
            if is_new:
                writer.writerow(REPORT_COLUMNS)
            for report in reports:
                writer.writerow(report.row())
        logging.debug(f"[output] {len(reports)} reports -> {target}")
        return target

    def reset(self, name: str) -> None:
        target = self.path(name)
        if os.path.exists(target):
            os.remove(target)

    def write_summary(self, values: Mapping[str, object], name: str = SUMMARY_FILE_NAME) -> str:
        target = self.path(name)
        with open(target, "w") as file:
            for key, value in values.items():
                file.write(f"{key} = {_render(value)}\n")
        return target

    def write_config_echo(self, config: ExperimentConfig) -> str:
        target = self.path(ECHO_FILE_NAME)
        with open(target, "w") as file:
            file.write("\n".join(config.to_lines()) + "\n")
        return target

    def write_text(self, name: str, content: str) -> str:
        target = self.path(name)
        with open(target, "w") as file:
            file.write(content)
        return target


def _render(value: object) -> str:
    if isinstance(value, str):
        return value
    try:
        return format_number(value)
    except (TypeError, ValueError):
        return str(value)


def failed_reports(reports: Sequence[BoundReport]) -> List[BoundReport]:
    return [report for report in reports if not report.satisfied]
