"""Run the service: ``python -m detector_service [--config path] [--port n]``."""

from __future__ import annotations

import argparse
import sys

import uvicorn

from .app import build_app
from .config import ConfigError, load_config


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="detector-service", description=__doc__)
    parser.add_argument("--config", default=None, help="INI config file")
    parser.add_argument("--host", default=None, help="override listen address")
    parser.add_argument("--port", type=int, default=None, help="override listen port")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.host:
        cfg.host = args.host
    if args.port:
        cfg.port = args.port

    uvicorn.run(build_app(cfg), host=cfg.host, port=cfg.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
