"""Wagon counting and identification pipeline.

Consumes per-frame detection records (from a pluggable detector), counts
wagons exactly once each, reconstructs and validates painted identification
codes, fuses dual-camera readings, and emits per-train mosaics, persisted
records and cloud reports.
"""

__version__ = "0.1.0"
