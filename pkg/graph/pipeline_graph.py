from dotenv import load_dotenv
load_dotenv()
from typing import List, Optional, TypedDict

from langgraph.graph import StateGraph

from stages.embed_stage import embed_stage
from stages.generate_stage import generate_stage
from stages.oos_stage import oos_stage


class GraphState(TypedDict, total=False):
    # Inputs
    dist_file: str
    n: int
    d: int
    embedding: str
    method: str
    atom: Optional[int]
    epsilon: Optional[float]
    seed: int
    out_dir: str
    # Stage outputs
    graph_file: str
    latent_file: str
    oos_file: str
    edge_count: int
    embedding_file: str
    eigenvalues: List[float]
    result_file: str
    w: List[float]
    oos_report: str


def build_graph():
    builder = StateGraph(state_schema=GraphState)

    builder.add_node("generate", generate_stage())
    builder.add_node("embed", embed_stage())
    builder.add_node("oos", oos_stage())

    # generate -> embed -> oos
    builder.set_entry_point("generate")
    builder.add_edge("generate", "embed")
    builder.add_edge("embed", "oos")
    builder.set_finish_point("oos")

    return builder.compile()
