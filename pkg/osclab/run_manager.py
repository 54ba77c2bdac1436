"""
Run manager for the Oscillatory Operator Laboratory
Handles output directories, logging, result tables and the run manifest
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from . import __version__
from .config import LOGGING, MANIFEST_NAME, OUTPUT_DIR, SUMMARY_NAME
from .validators import validate_results_table


class RunManager:
    def __init__(self, out_dir: Union[str, Path] = OUTPUT_DIR, level: str = LOGGING['level']):
        """
        Initialize RunManager with an output directory

        Args:
            out_dir: Directory receiving tables, summary, manifest and log
            level: Logging level name
        """
        self.out_dir = Path(out_dir)
        self.outputs: List[str] = []
        self.experiments: Dict[str, Dict[str, Any]] = {}
        self.started = datetime.now()

        # Create directories if they don't exist
        self.out_dir.mkdir(parents=True, exist_ok=True)

        # Configure logging
        logging.basicConfig(
            level=getattr(logging, level),
            format=LOGGING['format'],
            handlers=[
                logging.FileHandler(self.out_dir / LOGGING['file']),
                logging.StreamHandler()
            ],
            force=True
        )

    def write_table(self, name: str, rows: List[dict]) -> Path:
        """
        Write result rows as CSV

        Args:
            name: File stem
            rows: One dict per row; column order follows the first row

        Returns:
            Path of the written file
        """
        df = pd.DataFrame(rows)
        df, stats = validate_results_table(df)
        path = self.out_dir / f"{name}.csv"
        df.to_csv(path, index=False, float_format='%.12g')
        self.outputs.append(path.name)
        logging.info(f"Saved {len(df):,} rows to {path}")
        return path

    def record_report(self, report, name: Optional[str] = None) -> Path:
        """Write an experiment's rows and register its verdict; each name is recorded once"""
        name = name or report.name
        if name in self.experiments:
            raise ValueError(f"Experiment '{name}' already recorded in this run")
        path = self.write_table(name, report.rows)
        self.experiments[name] = {
            'output': path.name,
            'verdict': report.verdict,
            'summary': report.summary
        }
        logging.info(f"{name}: {report.summary}")
        return path

    @property
    def verdicts(self) -> Dict[str, str]:
        return {name: entry['verdict'] for name, entry in self.experiments.items()}

    @property
    def failed(self) -> bool:
        return any(v == 'fail' for v in self.verdicts.values())

    def write_summary(self) -> Path:
        lines = [f"{name}: {entry['summary']}" for name, entry in self.experiments.items()]
        path = self.out_dir / SUMMARY_NAME
        path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
        self.outputs.append(path.name)
        return path

    def write_manifest(self, config_path: Optional[Union[str, Path]] = None,
                       config: Optional[Dict[str, Any]] = None, command: str = '') -> Path:
        """Write the run manifest (config echo, version, timestamp, outputs, verdicts)"""
        manifest = {
            'command': command,
            'config_path': str(config_path) if config_path else None,
            'config': config or {},
            'version': __version__,
            'timestamp': self.started.isoformat(timespec='seconds'),
            'outputs': list(self.outputs),
            'experiments': self.experiments,
            'verdicts': self.verdicts
        }
        path = self.out_dir / MANIFEST_NAME
        path.write_text(json.dumps(manifest, indent=2, default=str), encoding='utf-8')
        logging.info(f"Saved manifest to {path}")
        return path

    def close(self) -> None:
        root = logging.getLogger()
        for handler in list(root.handlers):
            if isinstance(handler, logging.FileHandler):
                handler.close()
                root.removeHandler(handler)
