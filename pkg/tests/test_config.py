""" test config """
import argparse
from pathlib import Path

import pytest

from helmholtz import config

INI_TEST_FILE = Path(__file__).parent / "data" / "argparse.ini"


def __argparser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser("test argparse", allow_abbrev=False)
    parser.add_argument("--reps", type=int, default=1)
    parser.add_argument("--paper-scale", action="store_true")
    parser.add_argument("--log-level")

    return parser


def test_argparse_only() -> None:
    """all arguments from command line, using default for reps and paper-scale"""

    parser = __argparser()

    commandline = "--log-level info".split()

    args = config.handle_args(parser, "helmholtz-test", "helmholtz.ini", "test", opts=commandline)

    assert args.reps == 1
    assert args.log_level == "info"
    assert not args.paper_scale


def test_argparse_ini() -> None:
    """all arguments from experiment file"""
    parser = __argparser()

    commandline = f"--config {INI_TEST_FILE}".split()

    args = config.handle_args(parser, "helmholtz-test", "helmholtz.ini", "test", opts=commandline)

    assert args.reps == 3
    assert args.log_level == "debug"
    assert args.paper_scale is True


def test_argparse_ini_default_section() -> None:
    """only [DEFAULT] applies to other sections"""
    parser = __argparser()

    commandline = f"--config {INI_TEST_FILE}".split()

    args = config.handle_args(parser, "helmholtz-test", "helmholtz.ini", "other", opts=commandline)

    assert args.reps == 3
    assert args.log_level is None
    assert not args.paper_scale


def test_argparse_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """all arguments from prefixed environment variables"""
    parser = __argparser()

    env = {
        "HELMHOLTZ_LOG_LEVEL": "warning",
        "HELMHOLTZ_REPS": 4,
        "HELMHOLTZ_PAPER_SCALE": "yes",  # accepts both yes and true
    }

    for key, value in env.items():
        monkeypatch.setenv(key, str(value))

    args = config.handle_args(parser, "helmholtz-test", "helmholtz.ini", "test", opts=[])

    assert args.reps == 4
    assert args.log_level == "warning"
    assert args.paper_scale is True


def test_argparse_env_ini(monkeypatch: pytest.MonkeyPatch) -> None:
    """
    --reps from environment
    --paper-scale from experiment file
    --log-level from cmdline

    """
    parser = __argparser()

    monkeypatch.setenv("HELMHOLTZ_REPS", "4")

    commandline = f"--config {INI_TEST_FILE} --log-level error".split()

    args = config.handle_args(parser, "helmholtz-test", "helmholtz.ini", "test", opts=commandline)

    assert args.reps == 4
    assert args.log_level == "error"
    assert args.paper_scale is True


def test_unprefixed_env_is_ignored(monkeypatch: pytest.MonkeyPatch) -> None:
    """only HELMHOLTZ_ variables are read"""
    parser = __argparser()

    monkeypatch.setenv("REPS", "9")

    args = config.handle_args(parser, "helmholtz-test", "helmholtz.ini", "test", opts=[])

    assert args.reps == 1


def test_default_ini_location(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """experiment file from $XDG_CONFIG_HOME/<config_id>/<config_name>"""
    parser = __argparser()

    config_dir = tmp_path / "helmholtz-test"
    config_dir.mkdir()
    (config_dir / "helmholtz.ini").write_text("[DEFAULT]\nreps = 7\n")

    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path))

    args = config.handle_args(parser, "helmholtz-test", "helmholtz.ini", "test", opts=[])

    assert args.reps == 7


def test_config_id_without_name() -> None:
    """config_id and config_name go together"""

    with pytest.raises(config.ArgumentError):
        config.handle_args(__argparser(), "helmholtz-test", None, None, opts=[])


def test_required_not_supported() -> None:
    """required arguments are rejected"""

    parser = argparse.ArgumentParser("test required")
    parser.add_argument("--p", required=True)

    with pytest.raises(config.NotSupported):
        config.handle_args(parser, None, None, None, opts=["--p", "2"])
