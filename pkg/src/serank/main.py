#!/usr/bin/env python
"""
SERank 命令列介面

子命令：train、eval、flops、stability、ablate、compare、gen-synthetic。
報表以 TSV 輸出到 stdout，日誌輸出到 stderr。
結束碼：0 成功；2 設定 / 資料格式 / 缺少檔案；3 執行期錯誤（例如訓練中止）。
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from dotenv import load_dotenv

# 在設定 logger 之前載入 .env，讓 SERANK_LOG_LEVEL 生效
load_dotenv()

# ruff: noqa: E402
from .core.config import RunConfig, derive_seed, describe_keys, dump_section, load_run_config
from .core.errors import (
    ConfigurationError,
    DataParseError,
    SchemaError,
    SERankError,
    TrainingAbortedError,
)
from .core.logger_config import get_logger
from .core.models import ModelSpec, Variant
from .core.observability import available_threads, get_metrics, trace
from .data.letor import (
    Dataset,
    FeatureStats,
    compute_stats,
    normalize,
    parse_letor,
    save_stats,
)
from .data.synthetic import write_synthetic_splits
from .experiments.ablation import (
    ablation_suite,
    compare_variants,
    format_table,
    variant_specs,
)
from .experiments.stability import format_stability, stability_test
from .ranking.checkpoint import load_checkpoint, save_checkpoint
from .ranking.flops import compare_flops, count_flops, format_comparison, format_flops
from .ranking.metrics import evaluate, format_report
from .ranking.scoring import ScoringModel
from .training.trainer import train

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


# region: 共用


def _keys_epilog() -> str:
    rows = describe_keys()
    width = max(len(key) for key, _, _ in rows)
    lines = ["config keys (key = default):"]
    lines.extend(f"  {key.ljust(width)} = {default:<12} {desc}" for key, default, desc in rows)
    return "\n".join(lines)


def _load_config(args) -> RunConfig:
    overrides = {"seed": args.seed}
    if args.threads is not None:
        cap = available_threads()
        if args.threads > cap:
            logger.warning(f"--threads {args.threads} 超過可用核心數，改為 {cap}")
        overrides["threads"] = min(args.threads, cap)
    return load_run_config(args.config, overrides).resolved()


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out or cfg.output.dir)


def _emit(text: str, out: Optional[Path] = None, name: Optional[str] = None) -> None:
    sys.stdout.write(text)
    sys.stdout.flush()
    if out is not None and name is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")


def _require(path: Optional[str], key: str) -> Path:
    if not path:
        raise ConfigurationError(f"{key} is not set")
    resolved = Path(path)
    if not resolved.is_file():
        raise ConfigurationError(f"{key}: file not found: {resolved}")
    return resolved


def _load_splits(cfg: RunConfig) -> Tuple[Dataset, Dataset, Dataset, Optional[FeatureStats]]:
    """讀取 train / valid / test，並以訓練集統計量標準化"""
    width = cfg.model.feature_count
    drop = cfg.data.drop_irrelevant
    train_ds = parse_letor(_require(cfg.data.train, "data.train"), width, drop_irrelevant=drop)
    valid_ds = parse_letor(_require(cfg.data.valid, "data.valid"), width, drop_irrelevant=drop)
    test_ds = parse_letor(_require(cfg.data.test, "data.test"), width)
    stats = None
    if cfg.data.normalize:
        stats = compute_stats(train_ds)
        train_ds, valid_ds, test_ds = (normalize(ds, stats) for ds in (train_ds, valid_ds, test_ds))
    return train_ds, valid_ds, test_ds, stats


def _load_eval_data(args) -> Tuple[ScoringModel, Dataset]:
    checkpoint = Path(args.checkpoint)
    if not checkpoint.is_dir():
        raise ConfigurationError(f"checkpoint directory not found: {checkpoint}")
    model, stats = load_checkpoint(checkpoint)
    data_path = _require(args.data, "--data")
    dataset = parse_letor(data_path, model.spec.feature_count)
    if stats is not None:
        dataset = normalize(dataset, stats)
    return model, dataset


def _scale(args) -> float:
    return 100.0 if args.percent else 1.0


# endregion

# region: 子命令


@trace("cli.train")
def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    train_ds, valid_ds, test_ds, stats = _load_splits(cfg)

    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(
        dump_section("model", cfg.model) + dump_section("train", cfg.train), encoding="utf-8"
    )
    result = train(ScoringModel.init(cfg.model), train_ds, valid_ds, cfg.train)
    result.write_log(out / "train_log.tsv")
    save_checkpoint(result.best_model, out / "best", stats)
    save_checkpoint(result.final_model, out / "final", stats)
    if stats is not None:
        save_stats(stats, out / "stats.txt")

    report = evaluate(result.best_model, test_ds, threads=cfg.threads)
    _emit(format_report(report, _scale(args)), out, "test_metrics.tsv")
    return EXIT_OK


@trace("cli.eval")
def cmd_eval(args) -> int:
    model, dataset = _load_eval_data(args)
    threads = min(args.threads or 1, available_threads())
    report = evaluate(model, dataset, threads=threads)
    _emit(format_report(report, _scale(args)), Path(args.out) if args.out else None, "metrics.tsv")
    return EXIT_OK


@trace("cli.flops")
def cmd_flops(args) -> int:
    cfg = _load_config(args)
    channels = args.channels or cfg.model.feature_count
    if args.compare:
        univariate = cfg.model.model_copy(update={"variant": Variant.UNIVARIATE})
        specs: Dict[str, ModelSpec] = {"gsf(1)": univariate}
        specs.update(variant_specs(cfg.model, cfg.compare))
        text = format_comparison(compare_flops(specs, args.length, channels, baseline="gsf(1)"))
    else:
        text = format_flops(count_flops(cfg.model, args.length, channels))
    _emit(text, Path(args.out) if args.out else None, "flops.tsv")
    return EXIT_OK


@trace("cli.stability")
def cmd_stability(args) -> int:
    model, dataset = _load_eval_data(args)
    threads = min(args.threads or 1, available_threads())
    seed = 0 if args.seed is None else args.seed
    report = stability_test(model, dataset, args.fraction, seed, threads=threads)
    _emit(format_stability(report, _scale(args)), Path(args.out) if args.out else None, "stability.tsv")
    return EXIT_OK


@trace("cli.ablate")
def cmd_ablate(args) -> int:
    cfg = _load_config(args)
    train_ds, valid_ds, test_ds, _ = _load_splits(cfg)
    rows = ablation_suite(train_ds, valid_ds, test_ds, cfg.model, cfg.train)
    _emit(format_table(rows, _scale(args)), _out_dir(args, cfg), "ablation.tsv")
    return EXIT_OK


@trace("cli.compare")
def cmd_compare(args) -> int:
    cfg = _load_config(args)
    train_ds, valid_ds, test_ds, _ = _load_splits(cfg)
    specs = variant_specs(cfg.model, cfg.compare)
    rows = compare_variants(
        train_ds, valid_ds, test_ds, specs, cfg.train, baseline=cfg.compare.baseline
    )
    _emit(format_table(rows, _scale(args)), _out_dir(args, cfg), "compare.tsv")
    return EXIT_OK


@trace("cli.gen-synthetic")
def cmd_gen_synthetic(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    paths = write_synthetic_splits(cfg.synthetic, out, derive_seed(cfg.seed, "synthetic"))
    for split, path in paths.items():
        logger.info(f"{split}: {path}")
    return EXIT_OK


# endregion


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="serank", description="Sequencewise learning-to-rank toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    epilog = _keys_epilog()

    def add(name: str, handler, help_text: str, config: bool = True):
        p = sub.add_parser(
            name,
            help=help_text,
            description=help_text,
            epilog=epilog if config else None,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        if config:
            p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", help="output directory (default: output.dir)")
        p.add_argument("--seed", type=int, help="override the seed key")
        p.add_argument("--threads", type=int, help="worker cap")
        p.set_defaults(handler=handler)
        return p

    add("train", cmd_train, "train a model and evaluate it on the test split").add_argument(
        "--percent", action="store_true", help="report NDCG on the 0-100 scale"
    )

    for name, handler, help_text in (
        ("eval", cmd_eval, "evaluate a checkpoint on a LETOR file"),
        ("stability", cmd_stability, "document-masking stability test"),
    ):
        p = add(name, handler, help_text, config=False)
        p.add_argument("--checkpoint", required=True, help="checkpoint directory")
        p.add_argument("--data", required=True, help="LETOR file")
        p.add_argument("--percent", action="store_true", help="report NDCG on the 0-100 scale")
        if name == "stability":
            p.add_argument("--fraction", type=float, default=0.5, help="share of documents masked")

    p = add("flops", cmd_flops, "forward-pass FLOPs of the configured model")
    p.add_argument("--length", type=int, default=200, help="documents per query L")
    p.add_argument("--channels", type=int, help="feature count C (default: model.feature_count)")
    p.add_argument("--compare", action="store_true", help="compare compare.variants against gsf(1)")

    for name, handler, help_text in (
        ("ablate", cmd_ablate, "train serank_b and its squeeze / excitation ablations"),
        ("compare", cmd_compare, "train every model listed in compare.variants"),
    ):
        add(name, handler, help_text).add_argument(
            "--percent", action="store_true", help="report NDCG on the 0-100 scale"
        )

    add("gen-synthetic", cmd_gen_synthetic, "write seeded synthetic train/valid/test files")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigurationError, DataParseError, SchemaError, FileNotFoundError) as e:
        logger.error(f"設定或資料錯誤: {e}")
        return EXIT_CONFIG
    except TrainingAbortedError as e:
        logger.error(f"訓練中止: {e}")
        return EXIT_RUNTIME
    except SERankError as e:
        logger.error(f"執行失敗: {e}")
        return EXIT_RUNTIME
    finally:
        logger.debug(f"執行統計: {get_metrics()}")


def run() -> None:
    """console script 進入點"""
    sys.exit(main())


if __name__ == "__main__":
    run()
