"""
Main entry point for the streaming diarization engine.
Usage: python main.py {diarize,score,bench,simulate} [flags]
"""
import sys

from diar_pipeline.cli import main

if __name__ == "__main__":
    sys.exit(main())
