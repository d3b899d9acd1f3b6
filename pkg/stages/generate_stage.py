from pathlib import Path

from langchain_core.runnables import RunnableLambda

from cli.commands import cmd_generate


def generate_stage() -> RunnableLambda:
    """
    Generate Stage:
    Samples an RDPG graph, its latent positions and one out-of-sample vertex
    from the distribution file.

    Returns:
        RunnableLambda accepting a state dict with "dist_file", "n", "seed",
        "out_dir" and optional "atom", returns:
        {
            "graph_file": ..., "latent_file": ..., "oos_file": ...,
            "edge_count": int
        }
    """

    def _invoke(state: dict) -> dict:
        out = Path(state["out_dir"])
        print("-" * 60)
        print(f"🎲 [Generate Stage] Sampling n={state['n']} vertices with seed {state['seed']}...")

        written = cmd_generate(
            state["dist_file"],
            state["n"],
            out / "graph.txt",
            out / "latent.json",
            out_oos=out / "oos.json",
            atom=state.get("atom"),
            seed=state["seed"],
        )

        return {
            "graph_file": written["graph"],
            "latent_file": written["latent"],
            "oos_file": written["oos"],
            "edge_count": written["edges"],
        }

    return RunnableLambda(_invoke)
