"""Command-line client for the evaluation service.

Each subcommand builds a request model and posts it to the FastAPI app —
in-process by default (no daemon needed), or to a running server via
``--server URL``. Exit codes: 0 success, 1 validation/processing error,
2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .config import EvalConfig


def _abs(path: str | None) -> str | None:
    return None if path is None else str(Path(path).resolve())


class ServiceClient:
    """Thin HTTP client; spins the app up in-process unless a URL is given."""

    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings
            with warnings.catch_warnings():
                # starlette's sync ASGI client warns about its own httpx use
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .api import create_app
            self._client = TestClient(create_app(),
                                      base_url="http://tacbench.local",
                                      raise_server_exceptions=False)

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        body = response.json()
        if response.status_code != 200:
            raise ClientError(body)
        return body

    def close(self) -> None:
        self._client.close()


class ClientError(Exception):
    def __init__(self, body):
        self.body = body
        if isinstance(body, dict):
            message = body.get("detail") or body.get("error") or str(body)
            if isinstance(message, list):   # pydantic validation errors
                message = "; ".join(str(e.get("msg", e)) for e in message)
        else:
            message = str(body)
        super().__init__(str(message))


def _config_payload(args) -> dict:
    overrides = {}
    if getattr(args, "config", None):
        overrides.update(EvalConfig.load(args.config).to_dict())
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tacbench",
        description="Benchmark vision-based tactile sensors: simulate probe "
                    "datasets, evaluate predictions, emit comparable reports.")
    parser.add_argument("--server", default=None,
                        help="URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run virtual-sensor protocols into a workspace")
    p.add_argument("--spec", help="simspec.json (defaults to the built-in sensor)")
    p.add_argument("--out", required=True, help="output workspace directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--protocols", nargs="+",
                   default=["calibration", "spatial", "gratings", "repeatability", "scenes"])
    p.add_argument("--grid", type=int, default=40, help="calibration grid (n x n points)")
    p.add_argument("--repeat-points", type=int, default=100)
    p.add_argument("--repeat-trials", type=int, default=10)
    p.add_argument("--scene-grid", type=int, default=12)
    p.add_argument("--grating-presses", type=int, default=100)

    p = sub.add_parser("split", help="assign train/val/test (70:20:10)")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="split.csv path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--group-by-point", action="store_true",
                   help="keep all samples of a probe point in one split")

    p = sub.add_parser("fit-baseline", help="fit the k-NN baseline predictor")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True, help="model dump path (.json)")
    p.add_argument("--k", type=int, default=3)

    p = sub.add_parser("predict", help="predict six-vectors for a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="predictions.csv path")

    p = sub.add_parser("eval", help="run one evaluation section")
    eval_sub = p.add_subparsers(dest="section", required=True)

    e = eval_sub.add_parser("calib", help="calibration error metrics on the test split")
    e.add_argument("--dataset", required=True)
    e.add_argument("--preds", required=True)
    e.add_argument("--split", required=True)
    e.add_argument("--out", required=True, help="output directory")
    e.add_argument("--config")
    e.add_argument("--seed", type=int)

    e = eval_sub.add_parser("sr", help="spatial-resolution curve from gratings")
    e.add_argument("--dataset", help="grating dataset directory")
    e.add_argument("--pairs", help="precomputed sr_pairs.csv (skips classifier)")
    e.add_argument("--out", required=True)
    e.add_argument("--config")
    e.add_argument("--seed", type=int)

    e = eval_sub.add_parser("sensitivity", help="sensitivity map + uniformity")
    e.add_argument("--dataset", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--config")
    e.add_argument("--seed", type=int)

    e = eval_sub.add_parser("spatial", help="binned errors + spatial robustness")
    e.add_argument("--dataset", required=True)
    e.add_argument("--preds", required=True)
    e.add_argument("--norm-dataset", required=True,
                   help="calibration dataset the normalization was fitted on")
    e.add_argument("--norm-split", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--config")
    e.add_argument("--seed", type=int)

    e = eval_sub.add_parser("light", help="lighting robustness across scenes")
    e.add_argument("--dataset", required=True, help="baseline (calibration) dataset")
    e.add_argument("--preds", required=True, help="baseline predictions")
    e.add_argument("--split", required=True)
    e.add_argument("--scene", action="append", default=[],
                   metavar="ID:DATASET_DIR:PREDS",
                   help="repeatable; e.g. S1:ws/scenes/S1:preds_s1.csv")
    e.add_argument("--out", required=True)
    e.add_argument("--config")
    e.add_argument("--seed", type=int)

    e = eval_sub.add_parser("repeat", help="repeatability over trial groups")
    e.add_argument("--dataset", required=True)
    e.add_argument("--preds", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--config")
    e.add_argument("--seed", type=int)

    p = sub.add_parser("report", help="assemble section outputs into report.json")
    p.add_argument("--manifest", required=True)
    p.add_argument("--eval-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("radar", help="cross-sensor radar axes from >= 2 reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--themes", nargs="+",
                   choices=["intrinsic", "standard", "robustness"])

    p = sub.add_parser("serve", help="run the HTTP service with uvicorn")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _dispatch(args, client: ServiceClient) -> dict:
    if args.command == "simulate":
        return client.post("/pipeline/simulate", {
            "spec_path": _abs(args.spec), "out_dir": _abs(args.out),
            "seed": args.seed, "protocols": args.protocols,
            "calibration_grid": args.grid,
            "repeat_points": args.repeat_points,
            "repeat_trials": args.repeat_trials,
            "scene_grid": args.scene_grid,
            "grating_presses": args.grating_presses,
        })
    if args.command == "split":
        return client.post("/pipeline/split", {
            "dataset_dir": _abs(args.dataset), "out_path": _abs(args.out),
            "seed": args.seed, "group_by_point": args.group_by_point,
        })
    if args.command == "fit-baseline":
        return client.post("/pipeline/fit-baseline", {
            "dataset_dir": _abs(args.dataset), "split_path": _abs(args.split),
            "out_path": _abs(args.out), "k": args.k,
        })
    if args.command == "predict":
        return client.post("/pipeline/predict", {
            "dataset_dir": _abs(args.dataset), "model_path": _abs(args.model),
            "out_path": _abs(args.out),
        })
    if args.command == "eval":
        config = _config_payload(args)
        if args.section == "calib":
            return client.post("/pipeline/eval/calib", {
                "dataset_dir": _abs(args.dataset), "predictions_path": _abs(args.preds),
                "split_path": _abs(args.split), "out_dir": _abs(args.out),
                "config": config})
        if args.section == "sr":
            return client.post("/pipeline/eval/sr", {
                "dataset_dir": _abs(args.dataset), "pairs_path": _abs(args.pairs),
                "out_dir": _abs(args.out), "config": config})
        if args.section == "sensitivity":
            return client.post("/pipeline/eval/sensitivity", {
                "dataset_dir": _abs(args.dataset), "out_dir": _abs(args.out),
                "config": config})
        if args.section == "spatial":
            return client.post("/pipeline/eval/spatial", {
                "dataset_dir": _abs(args.dataset), "predictions_path": _abs(args.preds),
                "norm_dataset_dir": _abs(args.norm_dataset),
                "norm_split_path": _abs(args.norm_split),
                "out_dir": _abs(args.out), "config": config})
        if args.section == "light":
            scenes = []
            for entry in args.scene:
                parts = entry.split(":")
                if len(parts) != 3:
                    raise ClientError({"detail": f"--scene expects ID:DATASET_DIR:PREDS, got {entry!r}"})
                scenes.append({"scene_id": parts[0], "dataset_dir": _abs(parts[1]),
                               "predictions_path": _abs(parts[2])})
            return client.post("/pipeline/eval/light", {
                "baseline_dataset_dir": _abs(args.dataset),
                "baseline_predictions": _abs(args.preds),
                "split_path": _abs(args.split), "scenes": scenes,
                "out_dir": _abs(args.out), "config": config})
        if args.section == "repeat":
            return client.post("/pipeline/eval/repeat", {
                "dataset_dir": _abs(args.dataset), "predictions_path": _abs(args.preds),
                "out_dir": _abs(args.out), "config": config})
    if args.command == "report":
        return client.post("/pipeline/report", {
            "manifest_path": _abs(args.manifest), "eval_dir": _abs(args.eval_dir),
            "out_path": _abs(args.out), "config": _config_payload(args)})
    if args.command == "radar":
        return client.post("/pipeline/radar", {
            "report_paths": [_abs(p) for p in args.reports],
            "out_dir": _abs(args.out), "themes": args.themes})
    raise AssertionError(f"unhandled command {args.command}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "serve":
        import uvicorn

        from .api import create_app
        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0
    client = ServiceClient(args.server)
    try:
        body = _dispatch(args, client)
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 1
    finally:
        client.close()
    for path in body.get("files", []):
        print(f"wrote {path}")
    summary = body.get("summary", {})
    if summary:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
