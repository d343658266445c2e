"""Image/text encoder backends behind one name-keyed registry.

`toy-<dim>` is a deterministic offline backbone (fixed random projection of
pixel and character-trigram features) used for plumbing tests and demos.
`clip:<checkpoint>` loads a contrastive vision-language model through
transformers and shares its projection width between both modalities.
"""

from __future__ import annotations

import zlib

import numpy as np
from PIL import Image

TEXT_BUCKETS = 512
IMAGE_SIDE = 16


class EncoderLoadError(Exception):
    """The requested encoder cannot be constructed."""


class ToyEncoder:
    """Seeded random-projection encoder; same output width for both modalities."""

    def __init__(self, dim: int):
        if dim < 1:
            raise EncoderLoadError(f"toy encoder dim must be >= 1, got {dim}")
        self.name = f"toy-{dim}"
        self.dim = dim
        rng = np.random.default_rng(zlib.crc32(self.name.encode()))
        # +1 column: constant bias keeps all-zero inputs off the origin
        self._image_proj = rng.standard_normal((dim, IMAGE_SIDE * IMAGE_SIDE + 1))
        self._text_proj = rng.standard_normal((dim, TEXT_BUCKETS + 1))

    def _project(self, matrix: np.ndarray, features: np.ndarray) -> np.ndarray:
        x = np.append(features, 1.0)
        v = matrix @ x
        return (v / np.linalg.norm(v)).astype(np.float32)

    def encode_image(self, image: Image.Image) -> np.ndarray:
        gray = image.convert("L").resize((IMAGE_SIDE, IMAGE_SIDE), Image.BILINEAR)
        pixels = np.asarray(gray, dtype=np.float64).reshape(-1) / 255.0
        return self._project(self._image_proj, pixels)

    def encode_text(self, text: str) -> np.ndarray:
        padded = f"  {text.lower()}  "
        counts = np.zeros(TEXT_BUCKETS)
        for i in range(len(padded) - 2):
            bucket = zlib.crc32(padded[i : i + 3].encode("utf-8")) % TEXT_BUCKETS
            counts[bucket] += 1.0
        return self._project(self._text_proj, counts)

    def encode_images(self, images: list[Image.Image]) -> np.ndarray:
        return np.stack([self.encode_image(im) for im in images])

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        return np.stack([self.encode_text(t) for t in texts])


class ClipEncoder:
    """Contrastive VLM adapter; any transformers CLIP-family checkpoint."""

    def __init__(self, checkpoint: str, device: str | None = None):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as e:
            raise EncoderLoadError(f"clip backend needs torch+transformers: {e}") from e
        try:
            self._model = CLIPModel.from_pretrained(checkpoint)
            self._processor = CLIPProcessor.from_pretrained(checkpoint)
        except Exception as e:
            raise EncoderLoadError(f"cannot load checkpoint {checkpoint!r}: {e}") from e
        self._torch = torch
        self._device = device or "cpu"
        self._model.eval().to(self._device)
        self.name = f"clip:{checkpoint}"
        self.dim = int(self._model.config.projection_dim)
        if int(self._model.text_projection.out_features) != int(
            self._model.visual_projection.out_features
        ):
            raise EncoderLoadError(f"{checkpoint!r}: text/vision projection widths differ")

    def encode_images(self, images: list[Image.Image]) -> np.ndarray:
        inputs = self._processor(images=images, return_tensors="pt").to(self._device)
        with self._torch.no_grad():
            features = self._model.get_image_features(**inputs)
        return features.cpu().numpy().astype(np.float32)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        inputs = self._processor(
            text=texts, return_tensors="pt", padding=True, truncation=True
        ).to(self._device)
        with self._torch.no_grad():
            features = self._model.get_text_features(**inputs)
        return features.cpu().numpy().astype(np.float32)


def get_encoder(name: str, device: str | None = None):
    if name.startswith("toy-"):
        try:
            dim = int(name.split("-", 1)[1])
        except ValueError as e:
            raise EncoderLoadError(f"bad toy encoder name {name!r}") from e
        return ToyEncoder(dim)
    if name.startswith("clip:"):
        return ClipEncoder(name.split(":", 1)[1], device)
    raise EncoderLoadError(f"unknown encoder {name!r} (expected toy-<dim> or clip:<checkpoint>)")
