"""Engine configuration: one JSON document wires the whole pipeline.

Every tunable named by the loop (update step size, faithfulness
tolerance, style deviation threshold, refinement budget) has a named
key. Provider roles are configured independently, so the generator,
judge and translator can point at different models or at the offline
deterministic stand-ins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .feedback import lexicon_translate
from .offline import OfflineJudge, OfflineNarrator
from .orchestrator import Engine, LoopConfig
from .preference import CpmConfig
from .providers import OllamaProvider, ScriptedProvider
from .retrieval import HashedBowEmbedder, OllamaEmbedder, ingest_corpus
from .style import StyleConfig
from .templates import PACKAGED_TEMPLATE_DIR, TemplateSet
from .verification import FaithfulnessConfig

PROVIDER_KINDS = ("offline", "ollama", "scripted")
TRANSLATOR_KINDS = ("lexicon", "offline", "ollama", "scripted")


@dataclass
class ProviderSettings:
    kind: str = "offline"
    endpoint: str = "http://127.0.0.1:11434"
    model: str = "llama3"
    temperature: float = 0.7
    timeout: float = 60.0
    retries: int = 3
    replies: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in PROVIDER_KINDS and self.kind not in TRANSLATOR_KINDS:
            raise ValueError(f"unknown provider kind {self.kind!r}")


@dataclass
class EngineConfig:
    generator: ProviderSettings = field(default_factory=ProviderSettings)
    judge: ProviderSettings = field(
        default_factory=lambda: ProviderSettings(temperature=0.0)
    )
    translator: ProviderSettings = field(
        default_factory=lambda: ProviderSettings(kind="lexicon", temperature=0.0)
    )
    embedder: ProviderSettings = field(
        default_factory=lambda: ProviderSettings(kind="offline", model="nomic-embed-text")
    )
    cpm: CpmConfig = field(default_factory=CpmConfig)
    faithfulness: FaithfulnessConfig = field(default_factory=FaithfulnessConfig)
    style: StyleConfig = field(default_factory=StyleConfig)
    loop: LoopConfig = field(default_factory=LoopConfig)
    corpus_path: str | None = None
    template_path: str | None = None
    sessions_dir: str = "run/sessions"
    profiles_dir: str = "run/profiles"
    listen_address: str = "127.0.0.1:8077"
    seed: int | None = None

    def to_dict(self) -> dict:
        def provider_dict(p: ProviderSettings) -> dict:
            payload = {
                "kind": p.kind,
                "endpoint": p.endpoint,
                "model": p.model,
                "temperature": p.temperature,
                "timeout": p.timeout,
                "retries": p.retries,
            }
            if p.replies:
                payload["replies"] = list(p.replies)
            return payload

        return {
            "generator": provider_dict(self.generator),
            "judge": provider_dict(self.judge),
            "translator": provider_dict(self.translator),
            "embedder": provider_dict(self.embedder),
            "cpm": {
                "step_size": self.cpm.step_size,
                "convergence_threshold": self.cpm.convergence_threshold,
            },
            "faithfulness": {
                "tolerance_default": self.faithfulness.tolerance_default,
                "per_kind_tolerance": {
                    k.value: v for k, v in self.faithfulness.per_kind_tolerance.items()
                },
                "strict_untagged_numerals": self.faithfulness.strict_untagged_numerals,
            },
            "style": {
                "deviation_threshold": self.style.deviation_threshold,
                "judge_retries": self.style.judge_retries,
            },
            "loop": {
                "refinement_budget": self.loop.refinement_budget,
                "rag_enabled": self.loop.rag_enabled,
                "retrieval_k": self.loop.retrieval_k,
                "query_attribution_count": self.loop.query_attribution_count,
            },
            "corpus_path": self.corpus_path,
            "template_path": self.template_path,
            "sessions_dir": self.sessions_dir,
            "profiles_dir": self.profiles_dir,
            "listen_address": self.listen_address,
            "seed": self.seed,
        }


def _provider_settings(payload: dict | None, **defaults) -> ProviderSettings:
    merged = {**defaults, **(payload or {})}
    return ProviderSettings(**merged)


def config_from_dict(payload: dict) -> EngineConfig:
    return EngineConfig(
        generator=_provider_settings(payload.get("generator")),
        judge=_provider_settings(payload.get("judge"), temperature=0.0),
        translator=_provider_settings(
            payload.get("translator"), kind="lexicon", temperature=0.0
        ),
        embedder=_provider_settings(
            payload.get("embedder"), kind="offline", model="nomic-embed-text"
        ),
        cpm=CpmConfig(**payload.get("cpm", {})),
        faithfulness=FaithfulnessConfig(**payload.get("faithfulness", {})),
        style=StyleConfig(**payload.get("style", {})),
        loop=LoopConfig(**payload.get("loop", {})),
        corpus_path=payload.get("corpus_path"),
        template_path=payload.get("template_path"),
        sessions_dir=payload.get("sessions_dir", "run/sessions"),
        profiles_dir=payload.get("profiles_dir", "run/profiles"),
        listen_address=payload.get("listen_address", "127.0.0.1:8077"),
        seed=payload.get("seed"),
    )


def load_config(path: str | Path) -> EngineConfig:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    config = config_from_dict(payload)
    validate_config(config)
    return config


def validate_config(config: EngineConfig) -> None:
    """Input paths must exist before the engine starts; output
    directories are created on demand."""
    if config.corpus_path is not None and not Path(config.corpus_path).is_dir():
        raise FileNotFoundError(f"corpus_path does not exist: {config.corpus_path}")
    if config.template_path is not None and not Path(config.template_path).is_dir():
        raise FileNotFoundError(f"template_path does not exist: {config.template_path}")
    host, _, port = config.listen_address.partition(":")
    if not host or not port.isdigit():
        raise ValueError(f"listen_address must be host:port, got {config.listen_address!r}")


def _build_provider(settings: ProviderSettings, templates: TemplateSet, role: str):
    if settings.kind == "ollama":
        return OllamaProvider(
            endpoint=settings.endpoint,
            model=settings.model,
            timeout=settings.timeout,
            retries=settings.retries,
        )
    if settings.kind == "scripted":
        return ScriptedProvider(replies=list(settings.replies))
    if settings.kind == "offline":
        return OfflineNarrator(templates) if role == "generator" else OfflineJudge()
    raise ValueError(f"unknown provider kind {settings.kind!r}")


def build_engine(config: EngineConfig) -> Engine:
    validate_config(config)
    templates = TemplateSet(config.template_path or PACKAGED_TEMPLATE_DIR)
    generator = _build_provider(config.generator, templates, role="generator")
    judge = _build_provider(config.judge, templates, role="judge")
    if config.translator.kind in ("lexicon", "offline"):
        translator = lexicon_translate
    else:
        translator = _build_provider(config.translator, templates, role="translator")
    index = None
    if config.corpus_path is not None:
        if config.embedder.kind == "ollama":
            embedder = OllamaEmbedder(
                endpoint=config.embedder.endpoint, model=config.embedder.model
            )
        else:
            embedder = HashedBowEmbedder()
        index = ingest_corpus(config.corpus_path, embedder=embedder)
    return Engine(
        generator=generator,
        judge=judge,
        translator=translator,
        templates=templates,
        cpm_config=config.cpm,
        faithfulness_config=config.faithfulness,
        style_config=config.style,
        loop_config=config.loop,
        index=index,
        sessions_dir=config.sessions_dir,
        profiles_dir=config.profiles_dir,
        seed=config.seed,
        generator_model=config.generator.model,
        judge_model=config.judge.model,
        translator_model=config.translator.model,
        generator_temperature=config.generator.temperature,
        judge_temperature=config.judge.temperature,
    )
