"""Offline planted-truth simulator."""
from services.sim.world import SimPrompt, SimWorld, make_world, sim_prompts, trigger_rate

__all__ = ['SimPrompt', 'SimWorld', 'make_world', 'sim_prompts', 'trigger_rate']
