"""
Module: config.py
Description: Configuration defaults and the RunConfig settings model

Defaults are module constants (overridable through HASHSEG_* environment
variables or a .env file). RunConfig gathers every tunable of a run; it is
built from defaults < environment < config file < command-line flags.

External Dependencies:
- python-dotenv: https://github.com/theskumar/python-dotenv
- pydantic-settings: https://docs.pydantic.dev/latest/concepts/pydantic_settings/

Sample Input:
>>> load_run_config(Path("run.cfg"), {"k": 12})

Expected Output:
>>> RunConfig(grid=16, channels=1, masked=False, k=12, l=32, ...)

Example Usage:
>>> from hashseg.config import load_run_config
>>> cfg = load_run_config(None, {"seed": 0})
>>> cfg.code_config().dim
256
"""

# hashseg/config.py
import os
from pathlib import Path
from typing import Any

from dotenv import dotenv_values, load_dotenv
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

# Image code descriptor
DEFAULT_GRID = int(os.getenv('HASHSEG_DEFAULT_GRID', '16'))
DEFAULT_CHANNELS = int(os.getenv('HASHSEG_DEFAULT_CHANNELS', '1'))

# LSH index
DEFAULT_K = int(os.getenv('HASHSEG_DEFAULT_K', '24'))
DEFAULT_L = int(os.getenv('HASHSEG_DEFAULT_L', '32'))
MAX_K = 62  # keys are packed into a signed 64-bit integer

# Pipeline
DEFAULT_MIN_AREA = int(os.getenv('HASHSEG_DEFAULT_MIN_AREA', '1'))
DEFAULT_SCORE_THRESHOLD = float(os.getenv('HASHSEG_DEFAULT_SCORE_THRESHOLD', '0.5'))

# Pruning
DEFAULT_IOU_THRESHOLD = float(os.getenv('HASHSEG_DEFAULT_IOU_THRESHOLD', '0.0'))
DEFAULT_CONNECTIVITY = int(os.getenv('HASHSEG_DEFAULT_CONNECTIVITY', '4'))

# Hierarchy
MAX_LEVELS = 256

# Evaluation
DEFAULT_OVERLAP_THRESHOLD = 0.5

# Synthetic scenes
DEFAULT_SYNTH_WIDTH = 96
DEFAULT_SYNTH_HEIGHT = 96

INDEX_FORMAT_VERSION = 1
MANIFEST_FORMAT_VERSION = 1


class RunConfig(BaseSettings):
    """Every tunable of a segment/eval/index-stats run."""

    model_config = SettingsConfigDict(env_prefix='HASHSEG_', extra='ignore')

    # Image code
    grid: int = Field(DEFAULT_GRID, ge=2, description="Cells per side of the code grid")
    channels: int = Field(DEFAULT_CHANNELS, description="1 for luma, 3 for RGB")
    masked: bool = Field(False, description="Zero pixels outside the region for region codes")

    # LSH
    k: int = Field(DEFAULT_K, ge=1, le=MAX_K, description="Bits per hash key")
    l: int = Field(DEFAULT_L, ge=1, description="Number of hash tables")  # noqa: E741
    seed: int | None = Field(None, ge=0, description="Seed of the hash family")

    # Pipeline
    min_area: int = Field(DEFAULT_MIN_AREA, ge=1, description="Smallest region area indexed")
    score_threshold: float = Field(DEFAULT_SCORE_THRESHOLD, ge=0.0, le=1.0)
    fallback: bool = Field(True, description="Exact search when the LSH candidate set is empty")
    require_overlap: bool = Field(False, description="Skip matched regions that do not overlap the box")

    # Pruning
    iou_threshold: float = Field(DEFAULT_IOU_THRESHOLD, ge=0.0, le=1.0)
    connectivity: int = Field(DEFAULT_CONNECTIVITY, description="4 or 8 neighbourhood for mask cleanup")

    # Execution and paths
    jobs: int = Field(1, ge=1)
    images: Path | None = None
    hierarchies: Path | None = None
    detections: Path | None = None
    output: Path | None = None
    index_dir: Path | None = None

    @field_validator("channels")
    @classmethod
    def _check_channels(cls, value: int) -> int:
        if value not in (1, 3):
            raise ValueError("channels must be 1 (luma) or 3 (RGB)")
        return value

    @field_validator("connectivity")
    @classmethod
    def _check_connectivity(cls, value: int) -> int:
        if value not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")
        return value

    def code_config(self):
        from hashseg.core.codes import CodeConfig
        return CodeConfig(grid=self.grid, channels=self.channels, masked=self.masked)

    def prune_config(self):
        from hashseg.hsp import PruneConfig
        return PruneConfig(iou_threshold=self.iou_threshold, connectivity=self.connectivity)

    def segment_params(self):
        from hashseg.hsh_pipeline import SegmentParams
        if self.seed is None:
            raise ValueError("seed is required to build a hash map")
        return SegmentParams(
            k=self.k,
            l=self.l,
            seed=self.seed,
            min_area=self.min_area,
            fallback=self.fallback,
            require_overlap=self.require_overlap,
            prune=self.prune_config(),
        )


def normalize_key(key: str) -> str:
    """Config file keys are case-insensitive and accept '-' for '_'"""
    return key.strip().lower().replace('-', '_')


def read_config_file(path: Path) -> dict[str, Any]:
    """Parse a flat key=value config file into RunConfig field values"""
    from hashseg.core.errors import InputFormatError

    if not path.is_file():
        raise InputFormatError(f"config file not found: {path}")

    values = {normalize_key(k): v for k, v in dotenv_values(path).items() if v is not None}
    unknown = sorted(set(values) - set(RunConfig.model_fields))
    if unknown:
        raise InputFormatError(f"unknown config keys in {path}: {', '.join(unknown)}")
    return values


def load_run_config(config_file: Path | None, overrides: dict[str, Any]) -> RunConfig:
    """Build a RunConfig; flags (overrides) win over the config file, which wins over the environment"""
    values: dict[str, Any] = {}
    if config_file is not None:
        values.update(read_config_file(config_file))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


if __name__ == "__main__":
    config = RunConfig(seed=0)

    print("Run Configuration:")
    print(f"  Code grid: {config.grid}x{config.grid}, channels={config.channels}")
    print(f"  LSH: k={config.k}, l={config.l}, seed={config.seed}")
    print(f"  Pruning: tau={config.iou_threshold}, connectivity={config.connectivity}")

    print("\n✅ Configuration module validation passed")
