#!/usr/bin/env python3
"""
Report writers: pydantic reports to JSON, tabular data to CSV via pandas.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
from pydantic import BaseModel

from models.config_models import OutputFormat
from models.report_models import McReport, SweepResult
from src.dynamics.flow import Trajectory


class ReportExporter:
    """Writes reports into one output directory"""

    def __init__(self, out_dir: Path, fmt: OutputFormat = OutputFormat.JSON):
        self.out_dir = Path(out_dir)
        self.fmt = OutputFormat(fmt)
        self.logger = logging.getLogger(self.__class__.__name__)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[Path] = []

    @property
    def wants_json(self) -> bool:
        return self.fmt in (OutputFormat.JSON, OutputFormat.BOTH)

    @property
    def wants_csv(self) -> bool:
        return self.fmt in (OutputFormat.CSV, OutputFormat.BOTH)

    def _record(self, path: Path) -> Path:
        self.written.append(path)
        self.logger.info(f"Report written to {path}")
        return path

    def write_json(self, stem: str, report: BaseModel) -> Optional[Path]:
        """Summary JSON; always written unless the format is csv-only"""
        if not self.wants_json:
            return None
        path = self.out_dir / f"{stem}.json"
        path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return self._record(path)

    def write_frame(self, stem: str, df: pd.DataFrame) -> Optional[Path]:
        if not self.wants_csv:
            return None
        path = self.out_dir / f"{stem}.csv"
        df.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
        return self._record(path)

    def write_trajectory(self, stem: str, traj: Trajectory) -> Optional[Path]:
        """(t, log||x||) samples for plotting"""
        return self.write_frame(stem, pd.DataFrame({"t": traj.times, "log_norm": traj.log_norms}))

    def write_sweep(self, stem: str, result: SweepResult) -> Optional[Path]:
        """Sweep matrix: rows are magnitudes, columns are perturbation kinds"""
        data: Dict[str, list] = {"L": result.grid}
        if result.input_grid is not None:
            data["delta"] = result.input_grid
        for kind in result.kinds:
            data[kind] = result.fractions[kind]
        return self.write_frame(stem, pd.DataFrame(data))

    def write_mc(self, stem: str, report: McReport) -> Optional[Path]:
        """Per-trial exponents"""
        return self.write_frame(stem, pd.DataFrame({
            "trial": range(report.trials),
            "exponent": report.exponents,
        }))
