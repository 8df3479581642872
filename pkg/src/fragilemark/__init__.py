"""Fragile watermarking for image certification and manipulation forensics."""
