import json
import logging
import sys

import pytest

from dgc.logging_config import JsonFormatter, log_system_info, setup_logging


@pytest.fixture
def restore_root():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    for h in root.handlers[:]:
        root.removeHandler(h)
        h.close()
    for h in handlers:
        root.addHandler(h)
    root.setLevel(level)


def test_file_handlers(tmp_path, restore_root):
    setup_logging(level="DEBUG", log_dir=tmp_path, console=False, json_log=True)
    log = logging.getLogger("dgc.test")
    log.info("plain message")
    log.error("broken", extra={"data": {"sample": 4}})
    for h in logging.getLogger().handlers:
        h.flush()

    assert "plain message" in (tmp_path / "dgc.log").read_text(encoding="utf-8")
    errors = (tmp_path / "errors" / "errors.log").read_text(encoding="utf-8")
    assert "broken" in errors and "plain message" not in errors

    records = [json.loads(line) for line in (tmp_path / "dgc.json.log").read_text(encoding="utf-8").splitlines()]
    broken = [r for r in records if r["message"] == "broken"][0]
    assert broken["level"] == "ERROR"
    assert broken["data"] == {"sample": 4}


def test_level_names(restore_root):
    assert setup_logging(level="warning", console=False).level == logging.WARNING
    assert setup_logging(level="bogus", console=False).level == logging.INFO


def test_json_formatter_exception():
    try:
        raise RuntimeError("boom")
    except RuntimeError:
        record = logging.LogRecord("x", logging.ERROR, __file__, 1, "failed", None, sys.exc_info())
    data = json.loads(JsonFormatter().format(record))
    assert data["exception"]["type"] == "RuntimeError"
    assert data["exception"]["message"] == "boom"


def test_log_system_info(caplog):
    with caplog.at_level(logging.INFO, logger="dgc.logging_config"):
        log_system_info()
    assert "Python version" in caplog.text
