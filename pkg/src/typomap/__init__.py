"""Typological maps from massively parallel corpora.

Pipeline: corpus ingestion, geographic filtering, word alignment, pivot
usage-point extraction, association-based n-gram relabeling, Hamming/MDS
semantic maps, indicator kriging and SVG rendering.
"""
__version__ = "0.1.0"
