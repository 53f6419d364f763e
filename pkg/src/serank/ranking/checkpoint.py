"""
模型 checkpoint 讀寫

目錄結構：
    spec.txt            平面 `model.<key> = value` 設定
    params/<name>.bin   每個參數一個檔案
    buffers/<name>.bin  batch norm moving 統計量
    stats.txt           （選用）特徵標準化統計量

.bin 格式：4 bytes magic、uint32 維度數、每維 uint64 長度，之後為 little-endian float64 資料。
"""

import struct
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values
from pydantic import ValidationError

from ..autodiff.tensor import Node, parameter
from ..core.config import dump_section
from ..core.errors import SchemaError
from ..core.logger_config import get_logger
from ..core.models import ModelSpec
from ..data.letor import FeatureStats, load_stats, save_stats
from .scoring import ScoringModel, parameter_shapes

logger = get_logger(__name__)

MAGIC = b"SRK1"
SPEC_FILE = "spec.txt"
STATS_FILE = "stats.txt"


def write_array(array: np.ndarray, path: Path) -> None:
    array = np.asarray(array, dtype="<f8")
    header = MAGIC + struct.pack("<I", array.ndim) + struct.pack(f"<{array.ndim}Q", *array.shape)
    path.write_bytes(header + array.tobytes(order="C"))


def read_array(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise SchemaError(f"{path}: not a parameter file")
    (ndim,) = struct.unpack_from("<I", raw, 4)
    offset = 8 + 8 * ndim
    shape: Tuple[int, ...] = struct.unpack_from(f"<{ndim}Q", raw, 8)
    expected = int(np.prod(shape, dtype=np.int64)) * 8
    if len(raw) - offset != expected:
        raise SchemaError(f"{path}: expected {expected} data bytes, found {len(raw) - offset}")
    return np.frombuffer(raw, dtype="<f8", offset=offset).reshape(shape).astype(np.float64)


def save_checkpoint(
    model: ScoringModel,
    directory: Union[str, Path],
    stats: Optional[FeatureStats] = None,
) -> Path:
    """寫出 checkpoint，回傳目錄路徑"""
    directory = Path(directory)
    (directory / "params").mkdir(parents=True, exist_ok=True)
    (directory / SPEC_FILE).write_text(dump_section("model", model.spec), encoding="utf-8")
    for name, node in model.parameters.items():
        write_array(node.data, directory / "params" / f"{name}.bin")
    if model.buffers:
        (directory / "buffers").mkdir(exist_ok=True)
        for name, value in model.buffers.items():
            write_array(value, directory / "buffers" / f"{name}.bin")
    if stats is not None:
        save_stats(stats, directory / STATS_FILE)
    logger.info(f"checkpoint 已寫入 {directory}")
    return directory


def load_spec(directory: Union[str, Path]) -> ModelSpec:
    path = Path(directory) / SPEC_FILE
    if not path.is_file():
        raise SchemaError(f"checkpoint has no {SPEC_FILE}: {directory}")
    fields = {}
    for key, value in dotenv_values(path, interpolate=False).items():
        section, _, field = key.partition(".")
        if section != "model" or not field:
            raise SchemaError(f"{path}: unexpected key {key!r}")
        fields[field] = value
    try:
        return ModelSpec.model_validate(fields)
    except ValidationError as e:
        raise SchemaError(f"{path}: invalid model spec: {e}") from e


def load_checkpoint(
    directory: Union[str, Path],
) -> Tuple[ScoringModel, Optional[FeatureStats]]:
    """讀回 save_checkpoint 寫出的模型與（若有）統計量"""
    directory = Path(directory)
    spec = load_spec(directory)
    params: Dict[str, Node] = {}
    for path in sorted((directory / "params").glob("*.bin")):
        params[path.stem] = parameter(read_array(path), name=path.stem)
    buffers = {
        path.stem: read_array(path) for path in sorted((directory / "buffers").glob("*.bin"))
    }
    # 參數依 spec 的建立順序排列
    ordered = {name: params[name] for name in parameter_shapes(spec) if name in params}
    ordered.update({k: v for k, v in params.items() if k not in ordered})
    try:
        model = ScoringModel(spec, ordered, buffers)
    except ValueError as e:
        raise SchemaError(f"{directory}: {e}") from e
    stats_path = directory / STATS_FILE
    stats = load_stats(stats_path) if stats_path.is_file() else None
    return model, stats
