"""Extractor and renderer companion to the hyperlapse planner.

Turns real or synthetic videos into the planner's motion-trace and
correspondence JSON files, and executes the planner's sampling/panorama plans
into output frames.  It talks to the planner only through those files.
"""

from .config import ExtractionConfig, LENS_PROFILES
from .extract import (
    extract_trace,
    find_correspondences,
    save_correspondence,
    save_trace_doc,
)
from .render import MissingFrame, RenderResult, render_plan, render_panorama_plan, render_sampling_plan
from .video_io import read_frames, write_frames, write_video

__version__ = "0.1.0"
