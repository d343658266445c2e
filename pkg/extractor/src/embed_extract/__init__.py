"""Offline embedding extraction sidecar for the retrieval engine."""

from .encoders import ClipEncoder, EncoderLoadError, ToyEncoder, get_encoder
from .extract import ExtractionJob, extract_captions, extract_images
from .storefile import write_store

__version__ = "0.1.0"
