"""
Script to run latency/buffer/architecture sweeps.
Usage: python run_tests.py [--latencies 1 2] [--buffers 1 10] [--mask-latencies 5] [--variants full base] [--files N]
"""
import argparse
import asyncio
import math

from config.log import setup_logging
from config.pipeline import FeatureConfig, ModelConfig, SimConfig
from diar_pipeline.io.weights import load_weights, random_weights
from testing.orchestrator import VARIANTS, SweepOrchestrator


def _pct(value) -> str:
    return "   n/a" if value is None or math.isnan(value) else f"{value:6.1%}"


async def main():
    parser = argparse.ArgumentParser(description="Run diarization sweeps on simulated conversations")
    parser.add_argument("--latencies", type=float, nargs="+", default=[1.0, 2.0])
    parser.add_argument("--buffers", type=float, nargs="+", default=[1.0, 5.0, 10.0])
    parser.add_argument(
        "--mask-latencies",
        type=float,
        nargs="+",
        default=None,
        help="encoder look-aheads in seconds (default: each latency)",
    )
    parser.add_argument("--variants", nargs="+", choices=sorted(VARIANTS), default=["full"])
    parser.add_argument("--files", type=int, default=2, help="conversations per setting")
    parser.add_argument("--duration", type=float, default=60.0)
    parser.add_argument("--speakers", type=int, default=2)
    parser.add_argument("--weights", default=None, help="weight bundle (random weights if omitted)")
    parser.add_argument("--random-seed", type=int, default=0)
    parser.add_argument("--d-model", type=int, default=64)
    parser.add_argument("--layers", type=int, default=2)
    parser.add_argument("--db", default="data/sweep_results.db")
    parser.add_argument(
        "--summary",
        action="store_true",
        help="Show summary statistics instead of running the sweep"
    )
    parser.add_argument("--log-level", default="INFO")

    args = parser.parse_args()
    setup_logging(args.log_level)

    if args.weights:
        weights = load_weights(args.weights)
    else:
        model = ModelConfig(
            input_dim=FeatureConfig().feature_dim,
            d_model=args.d_model,
            n_heads=4,
            n_encoder_layers=args.layers,
            ff_dim=4 * args.d_model,
        )
        weights = random_weights(model, seed=args.random_seed)

    orchestrator = SweepOrchestrator(weights, db_path=args.db)

    if not args.summary:
        await orchestrator.run_sweep(
            latencies=args.latencies,
            buffers=args.buffers,
            variants=args.variants,
            n_files=args.files,
            sim=SimConfig(n_speakers=args.speakers, duration=args.duration),
            mask_latencies=args.mask_latencies or [None],
        )

    stats = await orchestrator.get_summary_stats()
    print("\n" + "=" * 84)
    print("SWEEP SUMMARY (DER with 0.25 s collar)")
    print("=" * 84)
    if not stats:
        print("No sweep results found")
    else:
        print(f"{'variant':<22} {'L':>5} {'B':>6} {'M':>5} {'runs':>4} {'DER':>7} {'chunk':>7} {'acc':>7} {'Mops':>10}")
        for row in stats:
            print(
                f"{row['variant']:<22} {row['latency']:5.1f} {row['buffer']:6.1f} {row['mask_latency']:5.1f} {row['runs']:4d} "
                f"{_pct(row['avg_der']):>7} {_pct(row['avg_chunk_der']):>7} "
                f"{_pct(row['avg_clustering_accuracy']):>7} {row['avg_ops'] / 1e6:10.2f}"
            )
    print("=" * 84)


if __name__ == "__main__":
    asyncio.run(main())
