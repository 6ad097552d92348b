"""Command-line front end.

Each subcommand parses flags, calls the library and writes its declared
outputs. Failures print one JSON line on stderr,
``{"error": <kind>, "exit_code": <n>, "message": <text>}``, and exit with a
code that depends on the failure kind (see ``EXIT_CODES``).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import FORMAT_VERSIONS, __version__, analysis, codec, harness, hmm, io
from .errors import (
    ConstructionError,
    DegenerateObservationError,
    DimensionError,
    EnumerationLimitError,
    FormatError,
    InvalidModelError,
    NoUniqueStationaryError,
    SwhmmError,
)
from .ldpc import DEFAULT_MAX_ITERS, ParityCheckMatrix, build_code, load_ensemble

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_DIMENSION = 4
EXIT_FORMAT = 5
EXIT_MODEL = 6

EXIT_CODES = {
    EXIT_OK: "success",
    EXIT_FAILURE: "unexpected error",
    EXIT_USAGE: "bad command line (unknown flag, missing argument, invalid value)",
    EXIT_MISSING_FILE: "input file not found",
    EXIT_DIMENSION: "dimension mismatch between inputs",
    EXIT_FORMAT: "malformed input file",
    EXIT_MODEL: "invalid model or unbuildable code",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _require(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return p


def _model(spec: str) -> hmm.HmmParams:
    if spec.upper() in hmm.PRESETS:
        return hmm.preset(spec)
    return hmm.load_model(_require(spec))


def _code(path: str) -> ParityCheckMatrix:
    return ParityCheckMatrix.load_alist(_require(path))


def _ensemble(spec: str):
    if Path(spec).suffix in (".json", ".toml", ".cfg"):
        _require(spec)
    return load_ensemble(spec)


# ---------------------------------------------------------------------------


def cmd_entropy_curve(a) -> int:
    params = _model(a.model)
    _write_text(a.out, harness.entropy_curve_csv(params, a.max_m, a.mode, a.samples, a.seed))
    return EXIT_OK


def cmd_gen_code(a) -> int:
    code = build_code(_ensemble(a.ensemble), a.n, a.seed)
    _write_text(a.out, code.to_alist())
    _progress(f"built code n={code.n} m={code.m} git_hash={code.git_hash()}")
    return EXIT_OK


def cmd_encode(a) -> int:
    layout = codec.FrameLayout.parse(a.layout)
    y = io.read_bitmatrix(_require(a.y))
    if a.x is not None:
        x = io.read_bitmatrix(_require(a.x))
        if x.shape != y.shape:
            raise DimensionError(f"x has shape {x.shape}, y has shape {y.shape}")
    stream = codec.encode(y, _code(a.code), layout, a.seed)
    io.write_stream(a.out, stream)
    _progress(f"wrote {stream.size_bits} payload bits for {y.size} source bits")
    return EXIT_OK


def cmd_decode(a) -> int:
    x = io.read_bitmatrix(_require(a.x))
    stream = io.read_stream(_require(a.stream))
    code = _code(a.code)
    params = _model(a.model)
    truth = io.read_bitmatrix(_require(a.truth)) if a.truth else None
    rep = codec.decode(x, stream, code, params, a.max_iters, truth=truth,
                       history=a.history, min_sum=a.min_sum)
    io.write_bitmatrix(a.out, rep.y_hat)
    msg = f"failed columns: {len(rep.failed_columns)}"
    if rep.distortion is not None:
        msg += f", distortion {rep.distortion:.3e}"
    _progress(msg)
    return EXIT_OK


def cmd_simulate(a) -> int:
    config = harness.ExperimentConfig.load(_require(a.config))
    if a.blocks is not None:
        config = harness.ExperimentConfig(**{**config.__dict__, "blocks": a.blocks})
    total = config.blocks

    def report(s):
        _progress(f"block {s.index}: errors={s.bit_errors} failed={len(s.failed_columns)}")

    result = harness.run_campaign(config, threads=a.threads, progress=report)
    csv_path, json_path = result.write(a.out_dir)
    _progress(f"{total} blocks in {result.wall_time:.1f} s; distortion "
              f"{result.aggregate_distortion:.3e}; wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_threshold(a) -> int:
    dd = _ensemble(a.ensemble)
    density = analysis.symmetrize(analysis.LlrDensity.load_csv(_require(a.density)))
    res = analysis.de_threshold(dd, density, a.target, a.resolution, a.max_iters)
    ens_id = dd.name or Path(a.ensemble).stem
    _write_text(a.out, analysis.threshold_csv_row(a.model_name, a.m, ens_id, res, a.target))
    return EXIT_OK


def cmd_density(a) -> int:
    params = _model(a.model)
    d = analysis.estimate_llr_density(params, a.m, a.samples, seed=a.seed)
    if a.symmetrize:
        d = analysis.symmetrize(d)
    _write_text(a.out, d.to_csv())
    _progress(f"channel capacity {analysis.channel_capacity(d):.6f} bits")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    versions = ", ".join(f"{k} format {v}" for k, v in FORMAT_VERSIONS.items())
    p = _Parser(prog="swhmm", description=__doc__.splitlines()[0],
                epilog="exit codes: " + "; ".join(f"{k} {v}" for k, v in EXIT_CODES.items()))
    p.add_argument("--version", action="version", version=f"swhmm {__version__} ({versions})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("entropy-curve", help="conditional entropy H(e | previous M) for M = 0..max-m")
    s.add_argument("--model", required=True, help="preset (M1, M2, M3) or model file")
    s.add_argument("--max-m", type=int, required=True)
    s.add_argument("--mode", choices=("exact", "monte_carlo"), default="exact")
    s.add_argument("--samples", type=int, default=200_000, help="monte_carlo sample count")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_entropy_curve)

    s = sub.add_parser("gen-code", help="build a parity-check matrix and write it as alist")
    s.add_argument("--ensemble", required=True, help="shipped ensemble id or JSON/TOML file")
    s.add_argument("--n", type=int, required=True, help="block length")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="alist path (default stdout)")
    s.set_defaults(func=cmd_gen_code)

    s = sub.add_parser("encode", help="compress y into a pilot-plus-syndrome stream")
    s.add_argument("--x", help="side information, only checked for matching shape")
    s.add_argument("--y", required=True, help="source bit matrix")
    s.add_argument("--code", required=True, help="alist file")
    s.add_argument("--layout", required=True, help="LxNxM, e.g. 100x2000x4")
    s.add_argument("--seed", type=int, default=0, help="interleaver seed")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("decode", help="recover y from a stream and the side information x")
    s.add_argument("--x", required=True)
    s.add_argument("--stream", required=True)
    s.add_argument("--code", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--truth", help="true y, to report distortion")
    s.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    s.add_argument("--history", choices=codec.HISTORY_MODES, default="full")
    s.add_argument("--min-sum", action="store_true")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("simulate", help="run a Monte Carlo campaign from a config file")
    s.add_argument("--config", required=True, help="TOML or JSON experiment config")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--blocks", type=int, help="override the config's block count")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("threshold", help="density-evolution achievable rate for an ensemble")
    s.add_argument("--ensemble", required=True)
    s.add_argument("--density", required=True, help="LLR density CSV")
    s.add_argument("--target", type=float, default=analysis.DEFAULT_TARGET_BER)
    s.add_argument("--resolution", type=float, default=1e-3)
    s.add_argument("--max-iters", type=int, default=1000)
    s.add_argument("--model-name", default="custom", help="label for the CSV row")
    s.add_argument("--m", type=int, default=4, help="pilot count label for the CSV row")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_threshold)

    s = sub.add_parser("density", help="estimate the predictive-LLR density of a model")
    s.add_argument("--model", required=True)
    s.add_argument("--m", type=int, default=4, help="past bits fed to the predictor")
    s.add_argument("--samples", type=int, default=200_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--symmetrize", action="store_true")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_density)
    return p


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, FileNotFoundError):
        return EXIT_MISSING_FILE
    if isinstance(exc, DimensionError):
        return EXIT_DIMENSION
    if isinstance(exc, FormatError):
        return EXIT_FORMAT
    if isinstance(exc, (InvalidModelError, NoUniqueStationaryError, ConstructionError,
                        EnumerationLimitError, DegenerateObservationError)):
        return EXIT_MODEL
    if isinstance(exc, ValueError):
        return EXIT_USAGE
    return EXIT_FAILURE


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (SwhmmError, UsageError, FileNotFoundError, ValueError, OSError) as exc:
        code = _exit_code(exc)
        kind = "UsageError" if code == EXIT_USAGE else type(exc).__name__
        print(json.dumps({"error": kind, "exit_code": code, "message": str(exc)}),
              file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
