from pathlib import Path

from langchain_core.runnables import RunnableLambda

from cli.commands import cmd_embed


def embed_stage() -> RunnableLambda:
    """
    Embed Stage:
    Spectrally embeds the generated graph (ASE or LSE) and stores the embedding.
    """

    def _invoke(state: dict) -> dict:
        kind = state["embedding"]
        print("-" * 60)
        print(f"🧭 [Embed Stage] Computing {kind.upper()} in d={state['d']}...")

        path = Path(state["out_dir"]) / "embedding.json"
        emb = cmd_embed(state["graph_file"], kind, state["d"], path)

        return {
            "embedding_file": str(path),
            "eigenvalues": emb.eigenvalues.tolist(),
        }

    return RunnableLambda(_invoke)
