"""
Export service writing experiment datasets, reports and run manifests.
"""
import logging
import os
import platform
from dataclasses import asdict
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
import scipy

from femtonet.models import ExperimentConfig, SystemParams
from femtonet.utils.export import DataExporter


class ExportService:
    """Service for writing experiment output files."""

    def __init__(self, output_dir: str, format: str = 'csv'):
        """
        Initialize the export service.

        Args:
            output_dir: directory receiving every file of the run (created if missing)
            format: dataset format, 'csv' or 'json'
        """
        if format not in ('csv', 'json'):
            raise ValueError(f"Unsupported export format: {format}")
        self.output_dir = output_dir
        self.format = format
        self.exporter = DataExporter()

    def _write(self, filename: str, content: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        path = os.path.join(self.output_dir, filename)
        with open(path, 'w', encoding='utf-8', newline='') as fh:
            fh.write(content)
        return path

    def write_dataset(self, name: str, data: pd.DataFrame) -> str:
        """
        Write one curve's dataset.

        Returns:
            Path of the written file
        """
        DataExporter.check_finite(data, name)
        if self.format == 'json':
            content = DataExporter.to_json(data)
        else:
            content = DataExporter.to_csv(data)
        path = self._write(f"{name}.{self.format}", content)
        logging.info(f"Exporting {len(data)} rows of {name} to {path}")
        return path

    def write_report(self, name: str, report: Dict[str, Any]) -> str:
        return self._write(f"{name}_report.json", DataExporter.to_json(report))

    def write_manifest(self, cfg: ExperimentConfig, params: Optional[SystemParams],
                       files: Dict[str, str]) -> str:
        """
        Write the run manifest: seed, flat config, resolved parameters, library versions.

        The manifest has no timestamps, so repeated runs produce identical files,
        and its `config` block can be fed back to the CLI to reproduce the run.
        """
        from femtonet import __version__

        manifest = {
            'experiment': cfg.experiment,
            'seed': cfg.seed,
            'config': cfg.to_flat(),
            'params': asdict(params) if params is not None else None,
            'files': {name: os.path.basename(path) for name, path in sorted(files.items())},
            'versions': {
                'femtonet': __version__,
                'python': platform.python_version(),
                'numpy': np.__version__,
                'scipy': scipy.__version__,
                'pandas': pd.__version__,
            },
        }
        path = self._write('manifest.json', DataExporter.to_json(manifest))
        logging.info(f"Wrote run manifest to {path}")
        return path
