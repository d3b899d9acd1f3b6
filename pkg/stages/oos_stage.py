from pathlib import Path

from langchain_core.runnables import RunnableLambda

from cli.commands import cmd_oos
from tools.format import format_box


def oos_stage() -> RunnableLambda:
    """
    OOS Stage:
    Extends the embedding to the held-out vertex and prints the estimate in a
    framed report.
    """

    def _invoke(state: dict) -> dict:
        method = state["method"]
        print("-" * 60)
        print(f"📍 [OOS Stage] Extending the embedding with {method}...")

        path = Path(state["out_dir"]) / "oos_result.json"
        estimate = cmd_oos(state["embedding_file"], state["oos_file"], method, path,
                           epsilon=state.get("epsilon"))

        lines = [f"📍 OOS estimate ({method})", f"w = {[round(v, 6) for v in estimate.w.tolist()]}"]
        if method == "ml-ase":
            diag = estimate.diagnostics
            lines.append(f"{diag.iterations} iterations, {diag.active_constraints} active constraints")
        report = format_box(lines, width=80)
        print(report)
        print("-" * 60 + "\n")

        return {
            "result_file": str(path),
            "w": estimate.w.tolist(),
            "oos_report": report,
        }

    return RunnableLambda(_invoke)
