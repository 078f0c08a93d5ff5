import csv
import io
import math
import os
import sys
from datetime import datetime, timezone

import orjson as json
import tzlocal

from config_manager import ConfigManager

FORMATS = ("csv", "json")


class ReportWriter:
    """Renders report rows as RFC-4180 CSV or a single JSON object.

    Floats are written with a fixed number of significant digits so repeated
    runs produce identical files. Timestamps are opt-in for the same reason.
    CSV carries the rows only; the config echo and metadata exist in JSON only.
    """

    def __init__(self, fmt="csv", significant_digits=12, timestamps=False):
        if fmt not in FORMATS:
            raise ValueError(f"Unsupported report format: {fmt}")
        self.fmt = fmt
        self.significant_digits = significant_digits
        self.timestamps = timestamps

    def format_number(self, value):
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return ""
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return f"{value:.{self.significant_digits}g}"
        return str(value)

    def round_value(self, value):
        if isinstance(value, bool) or value is None:
            return value
        if isinstance(value, float):
            if not math.isfinite(value):
                return None
            return float(f"{value:.{self.significant_digits}g}")
        if isinstance(value, dict):
            return {k: self.round_value(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [self.round_value(v) for v in value]
        return value

    @staticmethod
    def timestamp():
        epoch = os.getenv("SOURCE_DATE_EPOCH")
        if epoch:
            return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
        return datetime.now(tzlocal.get_localzone()).isoformat(timespec="seconds")

    def metadata(self, tolerance):
        meta = {"tool_version": ConfigManager.CURRENT_VERSION}
        if self.timestamps:
            meta["timestamp"] = self.timestamp()
        meta["tolerance"] = tolerance
        return meta

    def render_csv(self, columns, rows):
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\r\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([self.format_number(row.get(column)) for column in columns])
        return buffer.getvalue()

    def render_json(self, document):
        return json.dumps(self.round_value(document), option=json.OPT_INDENT_2).decode("utf-8") + "\n"

    def render(self, columns, rows, document):
        """``document`` is the full JSON object; CSV output only uses ``rows``."""
        if self.fmt == "csv":
            return self.render_csv(columns, rows)
        return self.render_json(document)

    @staticmethod
    def write(text, out_path=None):
        if out_path is None:
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        with open(out_path, "w", encoding="utf-8", newline="") as file:
            file.write(text)
