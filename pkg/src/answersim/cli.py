"""Command-line interface: a thin client of the evaluation service.

Every subcommand builds a request and POSTs it to the service. By default
the service app runs in-process (no server needed); --server switches to a
remote instance. Exit codes: 0 success, 1 validation error, 2 provider or
transport error.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys
from typing import Optional

import httpx

from .report import parse_config_file


class ServiceClient:
    """POSTs to a remote server when given a URL, otherwise to the in-process app."""

    def __init__(self, server: Optional[str] = None):
        self.server = server.rstrip("/") if server else None

    def post(self, path: str, payload: dict) -> httpx.Response:
        if self.server:
            with httpx.Client(timeout=300.0) as client:
                return client.post(self.server + path, json=payload)
        return asyncio.run(self._post_inprocess(path, payload))

    async def _post_inprocess(self, path: str, payload: dict) -> httpx.Response:
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://answersim.local", timeout=300.0
        ) as client:
            return await client.post(path, json=payload)


def _fail(kind: str, message: str) -> int:
    line = json.dumps({"error": message, "kind": kind}, ensure_ascii=False)
    print(line, file=sys.stderr)
    return 2 if kind == "provider" else 1


def _call(client: ServiceClient, path: str, payload: dict) -> tuple[int, Optional[dict]]:
    try:
        response = client.post(path, payload)
    except httpx.HTTPError as exc:
        return _fail("provider", f"cannot reach service: {exc}"), None
    if response.status_code >= 400:
        try:
            body = response.json()
            kind = body.get("kind", "validation")
            message = body.get("error", response.text)
        except ValueError:
            kind, message = "validation", response.text
        if response.status_code >= 500 and response.status_code != 502:
            kind = "provider"
        return _fail(kind, message), None
    return 0, response.json()


def _merged(args: argparse.Namespace, keys: list[str]) -> dict:
    """Config-file values overridden by explicitly passed flags."""
    payload: dict = {}
    if getattr(args, "config", None):
        file_values = parse_config_file(args.config)
        for key, value in file_values.items():
            if key in keys:
                payload[key] = value
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            payload[key] = value
    return payload


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="answersim",
        description="Semantic answer similarity metrics, correlation reports, "
        "and augmentation dataset generators.",
    )
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in-process")
    parser.add_argument("--config", default=None,
                        help="flat key = value config file; flags override it")
    # the same flags are accepted after the subcommand; SUPPRESS keeps a
    # pre-subcommand value from being clobbered by the subparser default
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score one answer pair with lexical metrics",
                       parents=[common])
    p.add_argument("--a", required=True, help="ground-truth answer")
    p.add_argument("--b", required=True, help="predicted answer")
    p.add_argument("--metrics", default="em,f1", help="comma-separated metric names")
    p.add_argument("--lang", default="en", choices=["en", "de"])

    p = sub.add_parser("eval", help="full evaluation run over a dataset", parents=[common])
    p.add_argument("--dataset")
    p.add_argument("--metrics")
    p.add_argument("--format", choices=["ndjson", "csv"])
    p.add_argument("--lang", choices=["en", "de"])
    p.add_argument("--token-embeddings", dest="token_embeddings")
    p.add_argument("--sentence-embeddings", dest="sentence_embeddings")
    p.add_argument("--pair-scores", dest="pair_scores")
    p.add_argument("--layer", type=int)
    p.add_argument("--idf", action="store_const", const=True, default=None)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("partition", help="split a dataset by token overlap", parents=[common])
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", choices=["ndjson", "csv"])
    p.add_argument("--lang", choices=["en", "de"])
    p.add_argument("--output-dir", dest="output_dir")

    p = sub.add_parser("dedup", help="drop duplicate answer pairs", parents=[common])
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", choices=["ndjson", "csv"])
    p.add_argument("--output")

    p = sub.add_parser("ablate-numbers", help="number-sensitivity ablations", parents=[common])
    p.add_argument("--dataset", required=True)
    p.add_argument(
        "--mode",
        required=True,
        choices=["drop_rows_with_digit_in_a", "strip_digits_both", "strip_digits_a_only"],
    )
    p.add_argument("--format", choices=["ndjson", "csv"])
    p.add_argument("--output")

    p = sub.add_parser("names-gen", help="generate the co-referent name pairs dataset", parents=[common])
    p.add_argument("--dump", required=True, help="person dump (csv or ndjson)")
    p.add_argument("--output", required=True)
    p.add_argument("--nationality", default="United States")
    p.add_argument("--max-variants", dest="max_variants", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--score-endpoint", dest="score_endpoint")
    p.add_argument(
        "--no-random",
        dest="include_random",
        action="store_const",
        const=False,
        default=None,
        help="emit variant positives only",
    )

    p = sub.add_parser("numbers-gen", help="generate the digit/word numbers dataset", parents=[common])
    p.add_argument("--max-n", dest="max_n", type=int, required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("audit-symmetry", help="per-record |score(ab) - score(ba)| report", parents=[common])
    p.add_argument("--dataset", required=True)
    p.add_argument("--metric", required=True)
    p.add_argument("--format", choices=["ndjson", "csv"])
    p.add_argument("--lang", choices=["en", "de"])
    p.add_argument("--token-embeddings", dest="token_embeddings")
    p.add_argument("--sentence-embeddings", dest="sentence_embeddings")
    p.add_argument("--pair-scores", dest="pair_scores")
    p.add_argument("--limit", type=int, default=20)
    p.add_argument("--output")

    p = sub.add_parser("layer-sweep", help="token-matching correlations per encoder layer", parents=[common])
    p.add_argument("--dataset", required=True)
    p.add_argument(
        "--token-embeddings",
        dest="token_embeddings",
        required=True,
        help="comma-separated embedding files, one per layer",
    )
    p.add_argument("--format", choices=["ndjson", "csv"])
    p.add_argument("--lang", choices=["en", "de"])
    p.add_argument("--layers", help="comma-separated layer numbers (default: all files)")
    p.add_argument("--idf", action="store_const", const=True, default=None)

    return parser


_EVAL_KEYS = [
    "dataset", "metrics", "format", "lang", "token_embeddings",
    "sentence_embeddings", "pair_scores", "layer", "idf", "output_dir", "seed",
    "http_batch_size", "http_max_retries",
]


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    client = ServiceClient(args.server)

    if args.command == "score":
        metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
        code, body = _call(
            client, "/score", {"a": args.a, "b": args.b, "metrics": metrics, "lang": args.lang}
        )
        if code == 0:
            print(" ".join(f"{m}={body['scores'][m]:.4f}" for m in metrics))
        return code

    if args.command == "eval":
        payload = _merged(args, _EVAL_KEYS)
        if isinstance(payload.get("metrics"), str):
            payload["metrics"] = [m.strip() for m in payload["metrics"].split(",") if m.strip()]
        if "idf" in payload and isinstance(payload["idf"], str):
            payload["idf"] = payload["idf"].lower() in ("true", "1", "yes")
        for key in ("layer", "seed", "http_batch_size", "http_max_retries"):
            if key in payload:
                payload[key] = int(payload[key])
        code, body = _call(client, "/eval", payload)
        if code == 0:
            print(json.dumps(body, indent=2, ensure_ascii=False))
        return code

    if args.command == "partition":
        payload = _merged(args, ["dataset", "format", "lang", "output_dir"])
        code, body = _call(client, "/partition", payload)
        if code == 0:
            print(json.dumps(body, indent=2, ensure_ascii=False))
        return code

    if args.command == "dedup":
        payload = _merged(args, ["dataset", "format", "output"])
        code, body = _call(client, "/dedup", payload)
        if code == 0:
            print(json.dumps(body, indent=2, ensure_ascii=False))
        return code

    if args.command == "ablate-numbers":
        payload = _merged(args, ["dataset", "format", "mode", "output"])
        code, body = _call(client, "/ablate-numbers", payload)
        if code == 0:
            print(json.dumps(body, indent=2, ensure_ascii=False))
        return code

    if args.command == "names-gen":
        payload = _merged(
            args,
            ["dump", "output", "nationality", "max_variants", "seed",
             "score_endpoint", "include_random"],
        )
        code, body = _call(client, "/names-gen", payload)
        if code == 0:
            print(json.dumps(body, indent=2, ensure_ascii=False))
        return code

    if args.command == "numbers-gen":
        payload = _merged(args, ["max_n", "output"])
        code, body = _call(client, "/numbers-gen", payload)
        if code == 0:
            print(json.dumps(body, indent=2, ensure_ascii=False))
        return code

    if args.command == "audit-symmetry":
        payload = _merged(
            args,
            ["dataset", "metric", "format", "lang", "token_embeddings",
             "sentence_embeddings", "pair_scores", "limit", "output"],
        )
        code, body = _call(client, "/audit-symmetry", payload)
        if code == 0:
            print(json.dumps(body, indent=2, ensure_ascii=False))
        return code

    if args.command == "layer-sweep":
        payload = _merged(args, ["dataset", "format", "lang", "idf"])
        payload["token_embeddings"] = [
            p.strip() for p in args.token_embeddings.split(",") if p.strip()
        ]
        if args.layers:
            payload["layers"] = [int(l) for l in args.layers.split(",")]
        code, body = _call(client, "/layer-sweep", payload)
        if code == 0:
            print(json.dumps(body, indent=2, ensure_ascii=False))
        return code

    return 1


if __name__ == "__main__":
    sys.exit(main())
