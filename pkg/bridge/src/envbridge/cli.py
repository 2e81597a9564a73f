"""Command line: `envbridge serve --env <id> --port <p>` (or --stdio)."""

from __future__ import annotations

import argparse
import sys

from .server import serve, serve_stdio


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="envbridge")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("serve", help="serve one environment over the bridge protocol")
    p.add_argument("--env", required=True, help="environment id (built-in or gymnasium)")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--port", type=int, default=9000)
    group.add_argument("--stdio", action="store_true",
                       help="speak the protocol on stdin/stdout instead of TCP")
    args = parser.parse_args(argv)
    if args.stdio:
        serve_stdio(args.env)
    else:
        serve(args.env, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
