"""Streaming online speaker diarization pipeline."""
