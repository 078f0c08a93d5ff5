import pytest

from config_manager import ConfigManager


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    monkeypatch.setenv("NLSHARE_CONFIG", str(tmp_path / "default" / "config.json"))
    monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)


@pytest.fixture
def config_manager(tmp_path):
    return ConfigManager(str(tmp_path / "nlshare" / "config.json"))
