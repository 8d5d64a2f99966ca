"""Backends answered by the offline simulator."""
import logging
from typing import Any, Optional

from core.dto.config import BackendConfig
from core.exceptions import PreconditionError
from core.types import ImageHandle, content_hash, prompt_id
from services.backends.base import BackendSuite, EmbeddingBackend, ImageBackend, Message, TextBackend, VisionBackend
from services.cache import CacheStore
from services.sim import oracle
from services.sim.world import SimWorld

logger = logging.getLogger(__name__)


def sim_config(name: str, world: SimWorld, max_parallel: int = 8) -> BackendConfig:
    """Backend config whose model id is bound to the world, so caches never mix worlds."""
    return BackendConfig(model_id=f"sim-{name}@{world.fingerprint()}", max_parallel=max_parallel, retry_limit=0)


class SimTextBackend(TextBackend):
    """Answers each purpose from its structured context."""

    def __init__(self, world: SimWorld, config: Optional[BackendConfig] = None, cache: Optional[CacheStore] = None):
        super().__init__(config or sim_config("text", world), cache)
        self.world = world

    async def _complete(
        self,
        messages: list[Message],
        temperature: float,
        purpose: str,
        context: dict[str, Any],
    ) -> str:
        world = self.world
        key = oracle.conversation_key(*(m["content"] for m in messages))

        if purpose == "dedup":
            return oracle.render_bullets(oracle.sim_dedup(context["attributes"]))
        if purpose == "describe":
            diverging, non_diverging = context["diverging"], context["non_diverging"]
            concepts = oracle.sim_describe(world, diverging, non_diverging, context["attribute"], key)
            return oracle.render_description(concepts, len(diverging), len(non_diverging))
        if purpose == "candidates":
            prompts = oracle.sim_candidates(world, context["concepts"], context["k"], context["attribute"], key)
            return oracle.render_numbered(prompts)
        if purpose == "judge_attribute":
            return oracle.render_rating(oracle.sim_judge_attribute(context["pred"], context["truth"]))
        if purpose == "judge_description":
            return oracle.render_rating(oracle.sim_judge_description(context["pred"], context["truth"]))
        if purpose == "prompt_pairs":
            pairs = oracle.sim_prompt_pairs(world, context["concepts"], context["attribute"], context["count"], key)
            return oracle.render_pairs(pairs)
        if purpose == "llm_only":
            triples = [tuple(t) for t in context["triples"]]
            return oracle.render_llm_only(oracle.sim_llm_only(world, triples))
        if purpose == "visdiff":
            pairs = [tuple(p) for p in context["pairs"]]
            return oracle.render_visdiff(oracle.sim_visdiff(pairs))

        # free-form generation: deterministic echo of the request
        return f"sim completion {key[:12]}"


class SimVisionBackend(VisionBackend):
    """Reads the tiled images from `grid.members` instead of pixels."""

    requires_raster = False

    def __init__(self, world: SimWorld, config: Optional[BackendConfig] = None, cache: Optional[CacheStore] = None):
        super().__init__(config or sim_config("vision", world), cache)
        self.world = world

    async def _describe(self, grid: ImageHandle, instruction: str, temperature: float, purpose: str) -> str:
        if not grid.members:
            raise PreconditionError(f"Sim grid {grid.id[:12]} lists no member images")
        if purpose == "caption":
            return oracle.sim_caption(self.world, grid.members)
        model_a, model_b = oracle.sim_propose_attributes(self.world, grid)
        return oracle.render_attribute_response(model_a, model_b)


class SimImageBackend(ImageBackend):
    """Handles without rasters; the id hashes (prompt, model, seed)."""

    def __init__(self, world: SimWorld, config: Optional[BackendConfig] = None, cache: Optional[CacheStore] = None):
        super().__init__(config or sim_config("image", world), cache)
        self.world = world

    async def _synthesize(self, prompt: str, model_tag: str, seed: int) -> ImageHandle:
        return ImageHandle(
            id=content_hash("sim-image", self.model_id, prompt, model_tag, str(seed)),
            source_prompt_id=prompt_id(prompt),
            model_tag=model_tag,
            seed=seed,
            source_prompt=prompt,
        )


class SimEmbeddingBackend(EmbeddingBackend):
    """Bag-of-tokens embeddings from the world vocabulary."""

    def __init__(self, world: SimWorld, config: Optional[BackendConfig] = None, cache: Optional[CacheStore] = None):
        super().__init__(config or sim_config("embedding", world), cache)
        self.world = world

    async def _embed_text(self, text: str) -> list[float]:
        return oracle.sim_text_embedding(self.world, text).to_list()

    async def _embed_image(self, image: ImageHandle) -> list[float]:
        if image.source_prompt is None:
            raise PreconditionError(f"Sim image {image.id[:12]} has no source prompt")
        return oracle.sim_image_embedding(self.world, image.source_prompt, image.model_tag, image.seed).to_list()


def build_sim_suite(
    world: SimWorld,
    cache: Optional[CacheStore] = None,
    model_tags: tuple[str, ...] = ("A", "B"),
    max_parallel: int = 8,
) -> BackendSuite:
    """All four capabilities backed by one world."""
    images = {
        tag: SimImageBackend(world, sim_config(f"image-{tag.lower()}", world, max_parallel), cache)
        for tag in model_tags
    }
    return BackendSuite(
        text=SimTextBackend(world, sim_config("text", world, max_parallel), cache),
        vision=SimVisionBackend(world, sim_config("vision", world, max_parallel), cache),
        embedding=SimEmbeddingBackend(world, sim_config("embedding", world, max_parallel), cache),
        images=images,
    )
