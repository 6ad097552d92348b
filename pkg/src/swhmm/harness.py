"""Monte Carlo campaigns: config, per-block runs, aggregation, output files.

Per-block seeds come from ``numpy.random.SeedSequence(entropy=seed,
spawn_key=(stream_id, block_index))`` with fixed stream ids, so a block's
randomness depends only on the config and its index; blocks can then run in
any order or on any number of threads and still merge to identical output.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, codec, hmm
from .codec import FrameLayout
from .config import read_config
from .errors import FormatError
from .hmm import HmmParams
from .ldpc import DEFAULT_MAX_ITERS, DegreeDistribution, ParityCheckMatrix, build_code, load_ensemble
from .ldpc.code import rank_gf2

CONFIG_VERSION = 1
STREAM_DATA = 0
STREAM_INTERLEAVER = 1
RATE_CONVENTIONS = ("exclude-pilots", "include-pilots")


def block_seed(seed: int, stream_id: int, block_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(stream_id, block_index))


@dataclass
class ExperimentConfig:
    model: HmmParams | str
    layout: FrameLayout
    ensemble: DegreeDistribution | str
    code_seed: int = 0
    data_seed: int = 0
    interleaver_seed: int = 0
    blocks: int = 50
    max_iters: int = DEFAULT_MAX_ITERS
    rate_convention: str = "exclude-pilots"
    history: str = "full"
    min_sum: bool = False
    name: str = ""

    def __post_init__(self):
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        if self.rate_convention not in RATE_CONVENTIONS:
            raise ValueError(f"rate_convention must be one of {RATE_CONVENTIONS}")

    @property
    def params(self) -> HmmParams:
        return hmm.load_model(self.model) if isinstance(self.model, str) else self.model

    @property
    def model_name(self) -> str:
        return self.model if isinstance(self.model, str) else "custom"

    def build(self) -> ParityCheckMatrix:
        """The code for this campaign: an alist path, or an ensemble built at block length."""
        ens = self.ensemble
        if isinstance(ens, str) and ens.endswith(".alist"):
            return ParityCheckMatrix.load_alist(ens)
        if isinstance(ens, str):
            ens = load_ensemble(ens)
        return build_code(ens, self.layout.block_length, self.code_seed)

    def to_dict(self) -> dict:
        ens = self.ensemble
        return {
            "version": CONFIG_VERSION,
            "name": self.name,
            "model": self.model if isinstance(self.model, str) else self.model.to_dict(),
            "layout": str(self.layout),
            "ensemble": ens if isinstance(ens, str) else ens.to_dict(),
            "code_seed": self.code_seed,
            "data_seed": self.data_seed,
            "interleaver_seed": self.interleaver_seed,
            "blocks": self.blocks,
            "max_iters": self.max_iters,
            "rate_convention": self.rate_convention,
            "history": self.history,
            "min_sum": self.min_sum,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        version = int(d.get("version", CONFIG_VERSION))
        if version != CONFIG_VERSION:
            raise FormatError(f"unsupported config version {version}")
        model = d.get("model", "M1")
        if isinstance(model, dict):
            model = hmm.params_from_mapping(model)
        ens = d.get("ensemble", "reg36")
        if isinstance(ens, dict):
            ens = DegreeDistribution.from_dict(ens)
        try:
            layout = FrameLayout.parse(str(d.get("layout", "100x2000x4")))
        except ValueError as exc:
            raise FormatError(str(exc)) from None
        return cls(model=model, layout=layout, ensemble=ens,
                   code_seed=int(d.get("code_seed", 0)), data_seed=int(d.get("data_seed", 0)),
                   interleaver_seed=int(d.get("interleaver_seed", 0)),
                   blocks=int(d.get("blocks", 50)),
                   max_iters=int(d.get("max_iters", DEFAULT_MAX_ITERS)),
                   rate_convention=str(d.get("rate_convention", "exclude-pilots")),
                   history=str(d.get("history", "full")), min_sum=bool(d.get("min_sum", False)),
                   name=str(d.get("name", "")))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        cfg = read_config(path)
        base = Path(path).parent
        ens = cfg.get("ensemble")
        # relative ensemble/code paths resolve against the config file
        if isinstance(ens, str) and (ens.endswith((".json", ".toml", ".alist"))):
            p = Path(ens)
            if not p.is_absolute():
                cfg = dict(cfg, ensemble=str(base / p))
        model = cfg.get("model")
        if isinstance(model, str) and model.upper() not in hmm.PRESETS:
            p = Path(model)
            cfg = dict(cfg, model=hmm.load_model(p if p.is_absolute() else base / p))
        return cls.from_dict(cfg)


@dataclass
class BlockSummary:
    index: int
    bit_errors: int
    distortion: float
    failed_columns: list[int]
    iterations: int

    def csv_row(self) -> str:
        failed = ";".join(map(str, self.failed_columns))
        return (f"{self.index},{self.bit_errors},{self.distortion:.9e},"
                f"{len(self.failed_columns)},{failed},{self.iterations}")


@dataclass
class CampaignResult:
    per_block: list[BlockSummary]
    aggregate_distortion: float
    compression_rate: float
    failed_column_rate: float
    code_rate: float
    code_hash: str
    config: ExperimentConfig
    wall_time: float = field(default=0.0, compare=False)

    def campaign_csv(self) -> str:
        lines = ["block,bit_errors,distortion,failed_count,failed_columns,iterations"]
        lines += [b.csv_row() for b in self.per_block]
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "swhmm_version": __version__,
            "blocks": len(self.per_block),
            "aggregate_distortion": f"{self.aggregate_distortion:.9e}",
            "total_bit_errors": sum(b.bit_errors for b in self.per_block),
            "failed_columns": sum(len(b.failed_columns) for b in self.per_block),
            "failed_column_rate": f"{self.failed_column_rate:.9e}",
            "compression_rate": f"{self.compression_rate:.12f}",
            "code_rate": f"{self.code_rate:.12f}",
            "code_hash": self.code_hash,
            "config": self.config.to_dict(),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "campaign.csv"
        json_path = out / "summary.json"
        csv_path.write_text(self.campaign_csv())
        json_path.write_text(self.summary_json())
        return csv_path, json_path


def run_block(config: ExperimentConfig, block_index: int,
              code: ParityCheckMatrix | None = None,
              params: HmmParams | None = None) -> codec.DecodeReport:
    code = code if code is not None else config.build()
    params = params if params is not None else config.params
    data_ss = block_seed(config.data_seed, STREAM_DATA, block_index)
    inter_ss = block_seed(config.interleaver_seed, STREAM_INTERLEAVER, block_index)
    inter_seed = int(inter_ss.generate_state(1, dtype=np.uint64)[0])
    pair = codec.generate_source_pair(params, config.layout, data_ss)
    stream = codec.encode(pair.y, code, config.layout, inter_seed)
    return codec.decode(pair.x, stream, code, params, config.max_iters, truth=pair.y,
                        history=config.history, min_sum=config.min_sum)


def _summarize(index: int, rep: codec.DecodeReport) -> BlockSummary:
    return BlockSummary(index=index, bit_errors=rep.bit_errors, distortion=rep.distortion,
                        failed_columns=list(rep.failed_columns),
                        iterations=int(sum(rep.per_column_iterations)))


def run_campaign(config: ExperimentConfig, threads: int = 1, block_offset: int = 0,
                 code: ParityCheckMatrix | None = None, progress=None) -> CampaignResult:
    """Run ``config.blocks`` blocks starting at index ``block_offset``."""
    t0 = time.perf_counter()
    code = code if code is not None else config.build()
    params = config.params
    indices = range(block_offset, block_offset + config.blocks)

    def one(i):
        s = _summarize(i, run_block(config, i, code, params))
        if progress is not None:
            progress(s)
        return s

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_block = list(pool.map(one, indices))
    else:
        per_block = [one(i) for i in indices]
    return _aggregate(per_block, config, code, time.perf_counter() - t0)


def _aggregate(per_block, config, code, wall_time) -> CampaignResult:
    lay = config.layout
    total_bits = len(per_block) * lay.block_length * lay.run_length
    errors = sum(b.bit_errors for b in per_block)
    failed = sum(len(b.failed_columns) for b in per_block)
    k = code.n - rank_gf2(code)
    pilots = lay.pilots if config.rate_convention == "include-pilots" else 0
    return CampaignResult(
        per_block=per_block,
        aggregate_distortion=errors / total_bits,
        compression_rate=codec.rate_formula(code.n, k, lay.run_length, pilots),
        failed_column_rate=failed / (len(per_block) * lay.coded_columns),
        code_rate=k / code.n,
        code_hash=code.git_hash(),
        config=config,
        wall_time=wall_time,
    )


def merge_campaigns(parts: list[CampaignResult]) -> CampaignResult:
    """Concatenate campaigns over disjoint block ranges of the same config."""
    if not parts:
        raise ValueError("nothing to merge")
    per_block = sorted((b for p in parts for b in p.per_block), key=lambda b: b.index)
    first = parts[0]
    cfg = ExperimentConfig(**{**first.config.__dict__, "blocks": len(per_block)})
    code_rate = first.code_rate
    merged = _aggregate_known(per_block, cfg, code_rate, first.code_hash,
                              sum(p.wall_time for p in parts))
    return merged


def _aggregate_known(per_block, config, code_rate, code_hash, wall_time) -> CampaignResult:
    lay = config.layout
    total_bits = len(per_block) * lay.block_length * lay.run_length
    errors = sum(b.bit_errors for b in per_block)
    failed = sum(len(b.failed_columns) for b in per_block)
    pilots = lay.pilots if config.rate_convention == "include-pilots" else 0
    return CampaignResult(
        per_block=per_block,
        aggregate_distortion=errors / total_bits,
        compression_rate=1.0 - code_rate * (1.0 - pilots / lay.run_length),
        failed_column_rate=failed / (len(per_block) * lay.coded_columns),
        code_rate=code_rate,
        code_hash=code_hash,
        config=config,
        wall_time=wall_time,
    )


def entropy_curve_csv(params: HmmParams, M_max: int, mode: str = "exact",
                      samples: int = 200_000, seed: int = 0) -> str:
    lines = ["M,conditional_entropy_bits"]
    for M, h in hmm.entropy_curve(params, M_max, mode, samples, seed):
        lines.append(f"{M},{h:.12f}")
    return "\n".join(lines) + "\n"
