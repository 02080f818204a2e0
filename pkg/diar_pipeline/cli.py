"""
Command-line surface: diarize, score, bench, simulate.

Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 internal
contract violation. Summaries go to stdout in a fixed field order; logs go
to stderr.
"""
import argparse
import sys
import time
from pathlib import Path
from typing import List, Optional

from loguru import logger
from pydantic import ValidationError

from config.log import setup_logging
from config.pipeline import FeatureConfig, ModelConfig, SimConfig, StreamConfig
from config.settings import settings
from .errors import (
    AudioFormatError,
    BundleFormatError,
    ConfigurationError,
    DiarizationError,
    EmptyReferenceError,
    RttmParseError,
)
from .io.audio import read_wav, write_wav
from .io.rttm import parse_rttm, records_to_segments, segments_to_records, write_rttm
from .io.simulate import simulate_conversation
from .io.weights import load_weights, random_weights
from .stream import diarize_samples

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CONTRACT = 3


class UsageError(Exception):
    """Flag values that parse but cannot be used together."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _flags_config(build):
    """Build a config from flag values; validation failures are usage errors."""
    try:
        return build()
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def _variant_model(model: ModelConfig, args) -> ModelConfig:
    use_attractor = not (args.base or args.no_attractor_decoder)
    use_centroid = not (args.base or args.no_centroid_decoder)
    return model.model_copy(update={
        "use_attractor_decoder": use_attractor,
        "use_centroid_decoder": use_centroid,
    })


def cmd_diarize(args) -> int:
    _flags_config(lambda: StreamConfig(latency=args.latency, buffer=args.buffer, mask_latency=args.mask_latency))
    bundle = load_weights(args.weights)
    model = _variant_model(bundle.config, args)
    cfg = _flags_config(lambda: StreamConfig(
        latency=args.latency,
        buffer=args.buffer,
        mask_latency=args.mask_latency,
        model=model,
    ))

    pcm = read_wav(args.audio, cfg.features.sample_rate)
    started = time.perf_counter()
    session = diarize_samples(bundle, cfg, pcm)
    elapsed = time.perf_counter() - started

    file_id = args.file_id or Path(args.audio).stem
    records = segments_to_records(session.emitted.to_segments(), file_id)
    Path(args.out).write_text(write_rttm(records), encoding="utf-8")
    print(f"SPEAKERS={session.emitted.n_speakers} FRAMES={session.clock} ELAPSED={elapsed:.3f}")
    return EXIT_OK


def cmd_score(args) -> int:
    # Local import keeps the engine package free of evaluation code.
    from testing.metrics import DiarizationMetrics

    if args.collar < 0:
        raise UsageError(f"--collar must be non-negative, got {args.collar}")
    ref = records_to_segments(parse_rttm(Path(args.ref).read_text(encoding="utf-8")))
    hyp = records_to_segments(parse_rttm(Path(args.hyp).read_text(encoding="utf-8")))
    result = DiarizationMetrics.der(ref, hyp, args.collar)
    print(result.summary_line())
    return EXIT_OK


def cmd_bench(args) -> int:
    from testing.benchmark import ComplexityBenchmark

    _flags_config(lambda: StreamConfig(latency=args.latency, buffer=args.buffer))
    if args.duration <= 0:
        raise UsageError(f"--duration must be positive, got {args.duration}")
    if args.weights:
        bundle = load_weights(args.weights)
    else:
        model = _flags_config(lambda: ModelConfig(
            input_dim=FeatureConfig().feature_dim,
            d_model=args.d_model,
            n_heads=args.heads,
            n_encoder_layers=args.layers,
            ff_dim=4 * args.d_model,
        ))
        bundle = random_weights(model, seed=args.random_seed)
    cfg = _flags_config(lambda: StreamConfig(
        latency=args.latency,
        buffer=args.buffer,
        unbounded_buffer=args.unbounded,
        model=bundle.config,
    ))

    result = ComplexityBenchmark(bundle, cfg).run(args.duration)
    print(f"{'step':>6} {'frames':>6} {'C':>4} {'ops':>14} {'wall_ms':>10}")
    for row in result.rows:
        print(row.format())
    print(f"MAX_OPS={result.max_ops}")
    print(result.verdict)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sim = _flags_config(lambda: SimConfig(
        n_speakers=args.speakers,
        duration=args.duration,
        seed=args.seed,
        overlap_ratio=args.overlap,
        silence_ratio=args.silence,
        mean_turn=args.mean_turn,
        sample_rate=FeatureConfig().sample_rate,
    ))
    pcm, reference = simulate_conversation(sim)
    write_wav(args.out_audio, pcm, sim.sample_rate)
    file_id = args.file_id or Path(args.out_audio).stem
    Path(args.out_rttm).write_text(write_rttm(segments_to_records(reference, file_id)), encoding="utf-8")
    print(f"SPEAKERS={len(reference.speakers)} SEGMENTS={len(reference)} DURATION={sim.duration:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=settings.log_level, help="loguru level for stderr logs")

    parser = _Parser(prog="diar", description="Streaming online speaker diarization")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("diarize", parents=[common], help="diarize a WAV file into RTTM")
    p.add_argument("--audio", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--latency", type=float, required=True, help="seconds")
    p.add_argument("--buffer", type=float, required=True, help="seconds")
    p.add_argument("--out", required=True)
    p.add_argument("--file-id", default=None)
    p.add_argument("--mask-latency", type=float, default=None, help="encoder look-ahead in seconds (default: latency)")
    p.add_argument("--base", action="store_true", help="disable both refinement decoders")
    p.add_argument("--no-attractor-decoder", action="store_true")
    p.add_argument("--no-centroid-decoder", action="store_true")
    p.set_defaults(handler=cmd_diarize)

    p = sub.add_parser("score", parents=[common], help="DER of a hypothesis RTTM")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--collar", type=float, default=0.25, help="seconds (default 0.25)")
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("bench", parents=[common], help="per-step op counts and wall time")
    p.add_argument("--latency", type=float, required=True)
    p.add_argument("--buffer", type=float, required=True)
    p.add_argument("--duration", type=float, required=True)
    source = p.add_mutually_exclusive_group()
    source.add_argument("--weights", default=None)
    source.add_argument("--random-seed", type=int, default=0)
    p.add_argument("--unbounded", action="store_true", help="keep every past frame in the buffer")
    p.add_argument("--d-model", type=int, default=256)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--layers", type=int, default=4)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("simulate", parents=[common], help="write a synthetic conversation")
    p.add_argument("--speakers", type=int, required=True)
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-audio", required=True)
    p.add_argument("--out-rttm", required=True)
    p.add_argument("--overlap", type=float, default=0.1)
    p.add_argument("--silence", type=float, default=0.1)
    p.add_argument("--mean-turn", type=float, default=3.0)
    p.add_argument("--file-id", default=None)
    p.set_defaults(handler=cmd_simulate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, BundleFormatError, RttmParseError, AudioFormatError,
            EmptyReferenceError, ConfigurationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (DiarizationError, ValueError, RuntimeError) as e:
        logger.exception("internal contract violation")
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_CONTRACT
