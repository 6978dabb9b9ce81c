import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from logstamp.config import PipelineConfig  # noqa: E402
from logstamp.corpus import split_train  # noqa: E402
from logstamp.pipeline import train_offline  # noqa: E402
from logstamp.synthetic import loghub_like, two_template_corpus  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def interface_corpus():
    return two_template_corpus(500, seed=0)


@pytest.fixture(scope="session")
def interface_pipeline(interface_corpus):
    train, _ = split_train(interface_corpus, 0.1, 0)
    return train_offline(train, PipelineConfig())


@pytest.fixture(scope="session")
def hdfs_like():
    return loghub_like("HDFS", 2000, seed=0)


@pytest.fixture(scope="session")
def hdfs_like_full_pipeline(hdfs_like):
    # offline model trained on every record
    train, _ = split_train(hdfs_like, 1.0, 0)
    return train_offline(train, PipelineConfig())


def loghub_dir() -> Path:
    return Path(os.environ.get("LOGSTAMP_DATA_DIR", Path(__file__).resolve().parents[1] / "data" / "loghub"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
