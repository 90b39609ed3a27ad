"""Evaluation: image metrics, error densities, tables, and figures."""

from .kde import KdeCurve, kde, scott_bandwidth
from .metrics import ImageMetrics, image_metrics, ssim_map
from .png import (save_curve_png, save_depth_png, save_panel_png, write_png)
from .report import aggregate_report, read_csv, write_csv

__all__ = [
    "ImageMetrics", "KdeCurve", "aggregate_report", "image_metrics", "kde",
    "read_csv", "save_curve_png", "save_depth_png", "save_panel_png",
    "scott_bandwidth", "ssim_map", "write_csv", "write_png",
]
