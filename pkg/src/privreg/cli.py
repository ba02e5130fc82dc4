"""Command-line interface: a thin client over the service endpoints.

By default requests go to an in-process instance of the app through an
ASGI transport, so no socket or separate server is needed; --server URL
switches to a remote instance with the same payloads. Subcommands: fit,
bench, theory, report, serve.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

__all__ = ["main"]


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        # starlette warns about its httpx-based TestClient; harmless here.
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _fail(response: httpx.Response) -> int:
    try:
        detail = response.json().get("detail", response.text)
    except Exception:
        detail = response.text
    print(f"error ({response.status_code}): {detail}", file=sys.stderr)
    return 1


def _load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _cmd_fit(args: argparse.Namespace) -> int:
    payload = _load_json(args.config)
    if args.seed is not None:
        payload["seed"] = args.seed
    with _client(args.server) as client:
        response = client.post("/fit", json=payload)
        if response.status_code != 200:
            return _fail(response)
        doc = response.json()
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    config = _load_json(args.config)
    if args.seed is not None:
        config["seeds"] = [args.seed]
    payload = {
        "config": config,
        "fail_fast": args.fail_fast,
        "threads": args.threads,
    }
    if args.out:
        payload["out_dir"] = str(Path(args.out).resolve())
    with _client(args.server) as client:
        response = client.post("/bench", json=payload)
        if response.status_code != 200:
            return _fail(response)
        doc = response.json()
    print(f"grid size: {doc['grid_size']}")
    print(f"results: {len(doc['results'])} ({doc['failure_count']} failed)")
    if doc.get("report_dir"):
        print(f"report dir: {doc['report_dir']}")
        for name in doc.get("report_files", []):
            print(f"  {name}")
    return 0


def _cmd_theory(args: argparse.Namespace) -> int:
    payload = {"mc_trials": args.trials, "seed": args.seed}
    if args.claims:
        payload["claims"] = [c for c in args.claims.split(",") if c]
    with _client(args.server) as client:
        response = client.post("/theory", json=payload)
        if response.status_code != 200:
            return _fail(response)
        doc = response.json()
    if args.out:
        Path(args.out).write_text(doc["csv_text"], encoding="utf-8", newline="")
        print(f"wrote {args.out}")
    else:
        print(doc["csv_text"], end="")
    failed = [r for r in doc["rows"] if not r["passed"]]
    print(f"{len(doc['rows'])} checks, {len(failed)} failed", file=sys.stderr)
    return 0 if doc["all_passed"] else 2


def _read_results_lines(path: str) -> list[dict]:
    results = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                results.append(json.loads(line))
    return results


def _cmd_report(args: argparse.Namespace) -> int:
    payload = {
        "results": _read_results_lines(args.results),
        "candidate": args.candidate,
        "baseline": args.baseline,
        "metric": args.metric,
    }
    if args.optimize_over:
        payload["optimize_over"] = [f for f in args.optimize_over.split(",") if f]
    with _client(args.server) as client:
        response = client.post("/report/ratio-cdf", json=payload)
        if response.status_code != 200:
            return _fail(response)
        doc = response.json()
    if args.out:
        Path(args.out).write_text(doc["csv_text"], encoding="utf-8", newline="")
        print(f"wrote {args.out}")
    else:
        print(doc["csv_text"], end="")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privreg",
        description="Differentially private linear regression toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a single model and print theta")
    fit.add_argument("--config", required=True, help="JSON file with the fit request fields")
    fit.add_argument("--seed", type=int, default=None, help="override the config seed")
    fit.add_argument("--out", default=None, help="write the response JSON here instead of stdout")
    fit.add_argument("--server", default=None, help="remote server URL (default: in-process)")
    fit.set_defaults(handler=_cmd_fit)

    bench = sub.add_parser("bench", help="run the benchmark grid and write reports")
    bench.add_argument("--config", required=True, help="JSON experiment config")
    bench.add_argument("--out", default=None, help="report output directory")
    bench.add_argument("--seed", type=int, default=None, help="replace the config seed list")
    bench.add_argument("--fail-fast", action="store_true", help="raise on the first failed cell")
    bench.add_argument("--threads", type=int, default=1, help="worker threads for grid cells")
    bench.add_argument("--server", default=None, help="remote server URL (default: in-process)")
    bench.set_defaults(handler=_cmd_bench)

    theory = sub.add_parser("theory", help="run the theory verification suite")
    theory.add_argument("--trials", type=int, default=2000, help="Monte-Carlo trials")
    theory.add_argument("--seed", type=int, default=0)
    theory.add_argument("--claims", default=None, help="comma-separated claim id prefixes")
    theory.add_argument("--out", default=None, help="write the table CSV here instead of stdout")
    theory.add_argument("--server", default=None, help="remote server URL (default: in-process)")
    theory.set_defaults(handler=_cmd_theory)

    report = sub.add_parser("report", help="build a ratio-CDF curve from stored results")
    report.add_argument("--results", required=True, help="results.jsonl from a bench run")
    report.add_argument("--candidate", default="boosted_adassp")
    report.add_argument("--baseline", default="adassp")
    report.add_argument("--metric", default="mse")
    report.add_argument(
        "--optimize-over", default=None,
        help="comma-separated grid axes (tau,rounds) collapsed to the best median, non-privately",
    )
    report.add_argument("--out", default=None, help="write the curve CSV here instead of stdout")
    report.add_argument("--server", default=None, help="remote server URL (default: in-process)")
    report.set_defaults(handler=_cmd_report)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(handler=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except httpx.HTTPError as exc:
        print(f"request failed: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
