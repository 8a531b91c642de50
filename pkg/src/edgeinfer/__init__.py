"""Config-driven local/remote neural inference at desk scale.

Compile textual graphs into content-hashed plans, execute them through a
deterministic interpreter (compiled kernel core with a pure numpy fallback),
serve them from an edge agent over a binary wire protocol, and benchmark the
whole pipeline with per-stage latency and power accounting.
"""

from .client import InferResult, Placement, Session, load_placement, session_open
from .core import DType, EdgeInferError, ErrorCode, Tensor, tensor_create, \
    tensor_equal_bitwise, tensor_num_bytes
from .graphlang import Graph, Node, NodeKind, parse_graph
from .interp import ExecutionReport, execute_plan
from .plan import ModelPlan, compile_graph, deserialize_plan, serialize_plan
from .store import PlanStore, save_plan

__version__ = "0.1.0"

__all__ = [
    "DType", "EdgeInferError", "ErrorCode", "ExecutionReport", "Graph",
    "InferResult", "ModelPlan", "Node", "NodeKind", "Placement", "PlanStore",
    "Session", "Tensor", "compile_graph", "deserialize_plan", "execute_plan",
    "load_placement", "parse_graph", "save_plan", "serialize_plan",
    "session_open", "tensor_create", "tensor_equal_bitwise", "tensor_num_bytes",
]
