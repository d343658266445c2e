"""Run configuration: INI file with per-module sections, flag overrides."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .engine import RetrievalConfig, RetrievalMode
from .vectors import FusionWeights

DATASETS = ("fashioniq", "cirr")

DEFAULT_ALPHA = 0.05
DEFAULT_BETA = 0.9
DEFAULT_K = {"fashioniq": 150, "cirr": 200}
DEFAULT_KS = {"fashioniq": (10, 50), "cirr": (1, 5, 10)}
DEFAULT_SUBSET_KS = {"fashioniq": (), "cirr": (1, 2, 3)}
# standard protocol removes the reference image from CIRR rankings
DEFAULT_EXCLUDE_REFERENCE = {"fashioniq": False, "cirr": True}


class ConfigError(Exception):
    """Invalid or incomplete run configuration."""


@dataclass
class ProviderConfig:
    kind: str = "fixture"
    fixture_dir: str = ""
    endpoint: str = ""
    api_key_env: str = "CAPTION_API_KEY"
    model: str = ""
    timeout: float = 60.0
    max_retries: int = 3
    temperature: float = 0.0
    min_interval: float = 0.0
    in_flight: int = 4


@dataclass
class RunConfig:
    """Everything one CLI invocation needs, resolved against dataset defaults."""

    dataset: str
    split: str = "val"
    category: str | None = None
    annotations: str = ""
    gallery_store: str = ""
    caption_store: str = ""
    caption_cache: str = "caption_cache.jsonl"
    output_dir: str = "out"
    images_dir: str = ""  # only needed when the http caption provider runs
    retrieval: RetrievalConfig | None = None
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    Ks: tuple[int, ...] = ()
    subset_Ks: tuple[int, ...] = ()
    workers: int = 1
    template_id: str = "default"

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ConfigError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if self.retrieval is None:
            self.retrieval = default_retrieval(self.dataset)
        if not self.Ks:
            self.Ks = DEFAULT_KS[self.dataset]
        if not self.subset_Ks:
            self.subset_Ks = DEFAULT_SUBSET_KS[self.dataset]

    def require_paths(self, *names: str) -> None:
        """Fail fast (ConfigError) when a named input path is unset or absent."""
        for name in names:
            value = getattr(self, name)
            if not value:
                raise ConfigError(f"config paths.{name} is not set")
            if not Path(value).exists():
                raise ConfigError(f"paths.{name} does not exist: {value}")


def default_retrieval(dataset: str) -> RetrievalConfig:
    return RetrievalConfig(
        k=DEFAULT_K[dataset],
        weights=FusionWeights(DEFAULT_ALPHA, DEFAULT_BETA),
        mode=RetrievalMode.FULL,
        exclude_reference=DEFAULT_EXCLUDE_REFERENCE[dataset],
    )


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in raw.replace(" ", "").split(",") if x)


def load_config(path: str | Path) -> RunConfig:
    """Parse the INI config; missing keys fall back to dataset defaults."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from e

    try:
        dataset = parser.get("dataset", "name", fallback="")
        if dataset not in DATASETS:
            raise ConfigError(f"{path}: dataset.name must be one of {DATASETS}")

        r = parser["retrieval"] if parser.has_section("retrieval") else {}
        weights = FusionWeights(
            float(r.get("alpha", DEFAULT_ALPHA)), float(r.get("beta", DEFAULT_BETA))
        )
        exclude_raw = r.get("exclude_reference")
        retrieval = RetrievalConfig(
            k=int(r.get("k", DEFAULT_K[dataset])),
            weights=weights,
            mode=RetrievalMode(r.get("mode", "full")),
            exclude_reference=(
                DEFAULT_EXCLUDE_REFERENCE[dataset]
                if exclude_raw is None
                else exclude_raw.strip().lower() in ("1", "true", "yes", "on")
            ),
            pre_normalize=(r.get("pre_normalize", "true").strip().lower() != "false"),
        )

        p = parser["provider"] if parser.has_section("provider") else {}
        provider = ProviderConfig(
            kind=p.get("kind", "fixture"),
            fixture_dir=p.get("fixture_dir", ""),
            endpoint=p.get("endpoint", ""),
            api_key_env=p.get("api_key_env", "CAPTION_API_KEY"),
            model=p.get("model", ""),
            timeout=float(p.get("timeout", 60.0)),
            max_retries=int(p.get("max_retries", 3)),
            temperature=float(p.get("temperature", 0.0)),
            min_interval=float(p.get("min_interval", 0.0)),
            in_flight=int(p.get("in_flight", 4)),
        )

        paths = parser["paths"] if parser.has_section("paths") else {}
        e = parser["eval"] if parser.has_section("eval") else {}
        return RunConfig(
            dataset=dataset,
            split=parser.get("dataset", "split", fallback="val"),
            category=parser.get("dataset", "category", fallback=None),
            annotations=paths.get("annotations", ""),
            gallery_store=paths.get("gallery_store", ""),
            caption_store=paths.get("caption_store", ""),
            caption_cache=paths.get("caption_cache", "caption_cache.jsonl"),
            output_dir=paths.get("output_dir", "out"),
            images_dir=paths.get("images_dir", ""),
            retrieval=retrieval,
            provider=provider,
            Ks=_ints(e.get("ks", "")),
            subset_Ks=_ints(e.get("subset_ks", "")),
            workers=int(e.get("workers", 1)),
            template_id=parser.get("captions", "template", fallback="default"),
        )
    except (ValueError, KeyError) as e:
        raise ConfigError(f"{path}: {e}") from e
