import logging
import os
import platform

import orjson as json

logger = logging.getLogger(__name__)


class ConfigManager:
    CURRENT_VERSION = "1.0.0"

    DEFAULT_OPTION_TOLERANCE = 1e-9
    DEFAULT_OPTION_STATE_TOLERANCE = 1e-10
    DEFAULT_OPTION_VIOLATION_TOLERANCE = 1e-12
    DEFAULT_OPTION_EPSILON = 0.01
    DEFAULT_OPTION_SIGNIFICANT_DIGITS = 12
    DEFAULT_OPTION_VERIFY_TRIALS = 500
    DEFAULT_OPTION_VERIFY_SEED = 20240229
    DEFAULT_OPTION_MAX_CONCURRENCY = 10
    DEFAULT_OPTION_LOG_LEVEL = "WARNING"
    DEFAULT_OPTION_REPORT_TIMESTAMPS = False

    OPTIONS = {
        "tolerance": DEFAULT_OPTION_TOLERANCE,
        "state_tolerance": DEFAULT_OPTION_STATE_TOLERANCE,
        "violation_tolerance": DEFAULT_OPTION_VIOLATION_TOLERANCE,
        "epsilon": DEFAULT_OPTION_EPSILON,
        "significant_digits": DEFAULT_OPTION_SIGNIFICANT_DIGITS,
        "verify_trials": DEFAULT_OPTION_VERIFY_TRIALS,
        "verify_seed": DEFAULT_OPTION_VERIFY_SEED,
        "max_concurrency": DEFAULT_OPTION_MAX_CONCURRENCY,
        "log_level": DEFAULT_OPTION_LOG_LEVEL,
        "report_timestamps": DEFAULT_OPTION_REPORT_TIMESTAMPS,
    }

    def __init__(self, config_path=None):
        self.config = {}
        self.config_path = config_path or os.getenv("NLSHARE_CONFIG") or self._get_config_path()
        self.load_config()

    def _get_config_path(self):
        app_name = "nlshare"
        if platform.system() == "Linux":
            config_dir = os.path.join(os.getenv("HOME", ""), f".config/{app_name}")
        elif platform.system() == "Darwin":  # macOS
            config_dir = os.path.join(
                os.getenv("HOME", ""), f"Library/Application Support/{app_name}"
            )
        elif platform.system() == "Windows":
            config_dir = os.path.join(os.getenv("APPDATA", ""), app_name)
        else:
            raise RuntimeError("Unsupported operating system")
        return os.path.join(config_dir, "config.json")

    def get_config_dir(self):
        return os.path.dirname(self.config_path)

    def load_config(self):
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                self.config = json.loads(f.read())
            if not isinstance(self.config, dict):
                self.config = self.default_config()
        except (OSError, json.JSONDecodeError):
            logger.info(f"Creating default config at {self.config_path}")
            self.config = self.default_config()
            self.save_config()

        self.update_patcher()

    def update_patcher(self):
        need_update = False

        # add options introduced after the file was written
        for key, default in ConfigManager.OPTIONS.items():
            if key not in self.config:
                self.config[key] = default
                need_update = True

        if self.config.get("version") != ConfigManager.CURRENT_VERSION:
            self.config["version"] = ConfigManager.CURRENT_VERSION
            need_update = True

        if need_update:
            self.save_config()

    @staticmethod
    def default_config():
        return {"version": ConfigManager.CURRENT_VERSION, **ConfigManager.OPTIONS}

    def save_config(self):
        try:
            os.makedirs(self.get_config_dir() or ".", exist_ok=True)
            serialized_config = json.dumps(self.config, option=json.OPT_INDENT_2)
            with open(self.config_path, "w", encoding="utf-8") as f:
                f.write(serialized_config.decode("utf-8"))
        except OSError as e:
            logger.warning(f"Error saving config to {self.config_path}: {e}")

    @property
    def tolerance(self):
        return float(self.config.get("tolerance", ConfigManager.DEFAULT_OPTION_TOLERANCE))

    @tolerance.setter
    def tolerance(self, value):
        self.config["tolerance"] = value

    @property
    def state_tolerance(self):
        return float(
            self.config.get("state_tolerance", ConfigManager.DEFAULT_OPTION_STATE_TOLERANCE)
        )

    @state_tolerance.setter
    def state_tolerance(self, value):
        self.config["state_tolerance"] = value

    @property
    def violation_tolerance(self):
        return float(
            self.config.get(
                "violation_tolerance", ConfigManager.DEFAULT_OPTION_VIOLATION_TOLERANCE
            )
        )

    @violation_tolerance.setter
    def violation_tolerance(self, value):
        self.config["violation_tolerance"] = value

    @property
    def epsilon(self):
        return float(self.config.get("epsilon", ConfigManager.DEFAULT_OPTION_EPSILON))

    @epsilon.setter
    def epsilon(self, value):
        self.config["epsilon"] = value

    @property
    def significant_digits(self):
        return int(
            self.config.get("significant_digits", ConfigManager.DEFAULT_OPTION_SIGNIFICANT_DIGITS)
        )

    @significant_digits.setter
    def significant_digits(self, value):
        self.config["significant_digits"] = value

    @property
    def verify_trials(self):
        return int(self.config.get("verify_trials", ConfigManager.DEFAULT_OPTION_VERIFY_TRIALS))

    @verify_trials.setter
    def verify_trials(self, value):
        self.config["verify_trials"] = value

    @property
    def verify_seed(self):
        return int(self.config.get("verify_seed", ConfigManager.DEFAULT_OPTION_VERIFY_SEED))

    @verify_seed.setter
    def verify_seed(self, value):
        self.config["verify_seed"] = value

    @property
    def max_concurrency(self):
        return int(
            self.config.get("max_concurrency", ConfigManager.DEFAULT_OPTION_MAX_CONCURRENCY)
        )

    @max_concurrency.setter
    def max_concurrency(self, value):
        self.config["max_concurrency"] = value

    @property
    def log_level(self):
        return str(self.config.get("log_level", ConfigManager.DEFAULT_OPTION_LOG_LEVEL)).upper()

    @log_level.setter
    def log_level(self, value):
        self.config["log_level"] = value

    @property
    def report_timestamps(self):
        return bool(
            self.config.get("report_timestamps", ConfigManager.DEFAULT_OPTION_REPORT_TIMESTAMPS)
        )

    @report_timestamps.setter
    def report_timestamps(self, value):
        self.config["report_timestamps"] = value
