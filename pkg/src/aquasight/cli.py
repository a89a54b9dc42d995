"""Command-line entry point.

Subcommands: gen-data, train, eval, predict, serve.  Exit codes follow one
contract everywhere: 0 success, 1 usage error, 2 runtime failure.  Human
output goes to stdout, progress and diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import socket
import sys
from dataclasses import replace
from pathlib import Path

from aquasight import dataset as data_mod
from aquasight.dataset import (
    DatasetError,
    ImageFormatError,
    InvalidImageError,
    generate_dataset,
    load_dataset,
    normalize_brightness,
    write_dataset,
)
from aquasight.metrics import (
    classify,
    confusion,
    metrics,
    metrics_to_dict,
    prediction_stats,
    render_metrics_table,
)
from aquasight.network import ShapeMismatch, SpecError, build, predict, reference_spec
from aquasight.pipeline import predict_bytes, prepare_image
from aquasight.tensor import Tensor
from aquasight.training import (
    TrainConfig,
    TrainingDivergedError,
    fit,
    split,
    write_report,
)
from aquasight.weights import WeightsFileError, load_network, save_weights

log = logging.getLogger(__name__)

_RUNTIME_ERRORS = (
    WeightsFileError,
    DatasetError,
    ImageFormatError,
    InvalidImageError,
    TrainingDivergedError,
    ShapeMismatch,
    SpecError,
    FileNotFoundError,
    OSError,
)


class UsageError(Exception):
    """Bad flag values; maps to exit code 1."""


class RuntimeFailure(Exception):
    """Operation failed after valid usage; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors by default; the contract wants 1
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aquasight",
                     description="water contamination image classifier")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write the synthetic dataset to a directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=7, help="master seed (default 7)")
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train", help="train the reference network on a dataset")
    p.add_argument("--data", required=True, help="dataset directory with manifest")
    p.add_argument("--out", required=True, help="weights file to write")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=5e-4)
    p.add_argument("--optimizer", choices=["adam", "sgd-momentum"], default="adam")
    p.add_argument("--momentum", type=float, default=0.9,
                   help="sgd-momentum coefficient")
    p.add_argument("--split", type=float, default=0.75,
                   help="train fraction (default 0.75)")
    p.add_argument("--seed", type=int, default=7,
                   help="seed for init, split, shuffling and dropout")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model over a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--beta", type=float, default=1.0, help="F-beta weight")
    p.add_argument("--report", default=None,
                   help="where to write the structured report "
                        "(default: next to the model)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("predict", help="classify one image file")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--no-normalize", action="store_true",
                   help="skip brightness normalization")
    p.add_argument("--json", action="store_true", dest="as_json",
                   help="machine-readable output")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    p.add_argument("--model", required=True)
    p.add_argument("--addr", default="127.0.0.1:8000", help="HOST:PORT to bind")
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=_cmd_serve)
    return parser


def _cmd_gen_data(args) -> int:
    samples = generate_dataset(args.seed)
    try:
        manifest_path = write_dataset(samples, args.out)
    except OSError as exc:
        raise RuntimeFailure(f"cannot write dataset to {args.out}: {exc}") from exc
    counts = data_mod.dataset_counts(samples)
    print(f"wrote {len(samples)} images "
          f"({counts['clean']} clean / {counts['contaminated']} contaminated) "
          f"to {args.out}")
    print(f"manifest: {manifest_path}")
    return 0


def _load_normalized(data_dir) -> list:
    samples = load_dataset(data_dir)
    return [replace(s, pixels=normalize_brightness(s.pixels)) for s in samples]


def _cmd_train(args) -> int:
    try:
        config = TrainConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            optimizer=args.optimizer,
            momentum=args.momentum,
            split_fraction=args.split,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    samples = _load_normalized(args.data)
    train_set, val_set = split(samples, config.split_fraction, config.seed)
    print(f"split train={len(train_set)} validation={len(val_set)}", file=sys.stderr)

    net = build(reference_spec(), init_seed=config.seed)
    net.train()
    report = fit(net, train_set, config, validation_samples=val_set)

    out_path = Path(args.out)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    checksum = save_weights(net, out_path)
    write_report(report, out_path.with_suffix(".report.txt"),
                 out_path.with_suffix(".report.json"))

    print(f"train={report.train_size} validation={report.validation_size}")
    print(f"validation accuracy {report.validation_accuracy:.6f}")
    print(f"validation loss {report.validation_loss:.6f}")
    print(f"model written to {out_path} (version {checksum[:16]})")
    return 0


def _cmd_eval(args) -> int:
    if args.beta <= 0:
        raise UsageError(f"--beta must be positive, got {args.beta}")
    net = load_network(args.model)
    samples = _load_normalized(args.data)

    predictions = [classify(predict(net, s.pixels)) for s in samples]
    labels = [s.label for s in samples]
    cm = confusion(predictions, labels)
    report = metrics(cm, beta=args.beta)
    stats = prediction_stats(predictions)

    print(f"confusion TP={cm.tp} TN={cm.tn} FP={cm.fp} FN={cm.fn}")
    print(render_metrics_table(report))
    for cls, class_stats in (("clean", stats.clean), ("contaminated", stats.contaminated)):
        if class_stats is None:
            print(f"{cls} predictions: none")
        else:
            print(f"{cls} predictions: mean={class_stats.mean:.3f} "
                  f"min={class_stats.lo:.3f} max={class_stats.hi:.3f}")

    report_path = Path(args.report) if args.report else \
        Path(args.model).with_suffix(".eval.json")
    payload = {
        "format": "aquasight-eval-report",
        "version": 1,
        "model_version": net.weights_checksum,
        "confusion": {"tp": cm.tp, "tn": cm.tn, "fp": cm.fp, "fn": cm.fn},
        "metrics": metrics_to_dict(report),
        "prediction_stats": {
            "clean": None if stats.clean is None else
            {"mean": stats.clean.mean, "min": stats.clean.lo, "max": stats.clean.hi},
            "contaminated": None if stats.contaminated is None else
            {"mean": stats.contaminated.mean, "min": stats.contaminated.lo,
             "max": stats.contaminated.hi},
        },
        "predictions": [
            {"name": s.name, "label": s.label,
             "raw": p.raw, "class": p.verdict}
            for s, p in zip(samples, predictions)
        ],
    }
    report_path.write_text(json.dumps(payload, indent=2) + "\n")
    print(f"report written to {report_path}", file=sys.stderr)
    return 0


def _cmd_predict(args) -> int:
    net = load_network(args.model)
    image_path = Path(args.image)
    if not image_path.exists():
        raise RuntimeFailure(f"image file not found: {image_path}")
    prediction = predict_bytes(net, image_path.read_bytes(),
                               normalize=not args.no_normalize)
    if args.as_json:
        print(json.dumps({
            "class": prediction.verdict,
            "raw": round(prediction.raw, 6),
            "confidence": round(prediction.confidence, 6),
            "model-version": net.weights_checksum,
        }))
    else:
        print(f"{prediction.verdict} raw={prediction.raw:.3f} "
              f"confidence={prediction.confidence:.3f}")
    return 0


def _parse_addr(addr: str) -> tuple[str, int]:
    host, sep, port_text = addr.rpartition(":")
    if not sep or not host:
        raise UsageError(f"--addr must be HOST:PORT, got {addr!r}")
    try:
        port = int(port_text)
    except ValueError as exc:
        raise UsageError(f"--addr port must be an integer, got {port_text!r}") from exc
    if not 0 < port < 65536:
        raise UsageError(f"--addr port out of range: {port}")
    return host, port


def _cmd_serve(args) -> int:
    host, port = _parse_addr(args.addr)
    # load before binding so a corrupt model never occupies the port
    net = load_network(args.model)

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise RuntimeFailure(f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        probe.close()

    import uvicorn

    from aquasight.service import create_app

    app = create_app(net=net, normalize=not args.no_normalize)
    print(f"serving model {net.weights_checksum} on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"aquasight: error: {exc}", file=sys.stderr)
        return 1
    except RuntimeFailure as exc:
        print(f"aquasight: {exc}", file=sys.stderr)
        return 2
    except _RUNTIME_ERRORS as exc:
        print(f"aquasight: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
