"""Batch-inference bridge between pretrained checkpoints and the chroma
toolkit's file formats: expanded prompt files in, prediction or embedding
files out."""

__version__ = "0.1.0"
