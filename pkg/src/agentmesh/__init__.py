"""agentmesh: layered multi-agent retrieval QA engine.

Specialized agents with private knowledge bases answer in parallel within
layers; a terminal aggregator fuses their labeled outputs; guards flag
ungrounded sentences and honor deliberate abstention; a benchmark harness
measures the latency/context tradeoffs of multi-agent fan-out.
"""

from .engine import Engine, EngineConfig

__version__ = "0.1.0"

__all__ = ["Engine", "EngineConfig", "__version__"]
