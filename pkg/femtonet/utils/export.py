import json

import numpy as np
import pandas as pd

from femtonet.errors import NumericError


class DataExporter:
    @staticmethod
    def check_finite(data: pd.DataFrame, name: str = 'dataset'):
        """
        Reject frames holding NaN or infinite numeric cells.

        Raises:
            NumericError: naming the offending columns
        """
        numeric = data.select_dtypes(include=[np.number])
        bad = [col for col in numeric.columns if not np.all(np.isfinite(numeric[col].to_numpy(dtype=float)))]
        if bad:
            raise NumericError(f"{name}: non-finite values in column(s) {', '.join(bad)}", state={'columns': bad})

    @staticmethod
    def to_json(data):
        """
        Export data to JSON format

        Args:
            data: Data to export (DataFrame as an array of row records, or a plain dict/list)

        Returns:
            str: JSON string
        """
        if isinstance(data, pd.DataFrame):
            return data.to_json(orient='records', double_precision=15, indent=2) + '\n'
        return json.dumps(data, default=_json_default, indent=2, sort_keys=True) + '\n'

    @staticmethod
    def to_csv(data):
        """
        Export data to CSV format

        Args:
            data: Data to export (DataFrame or list of row dicts)

        Returns:
            str: CSV string with a header row
        """
        if not isinstance(data, pd.DataFrame):
            data = pd.DataFrame(list(data) if not isinstance(data, dict) else [data])
        return data.to_csv(index=False, float_format='%.12g', lineterminator='\n')


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)
