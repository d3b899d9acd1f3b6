import textwrap
from typing import Iterable, Sequence

from tabulate import tabulate


def format_box(lines: list[str], width: int = 80, padding: int = 2) -> str:
    """
    Center lines of text inside a fixed-width framed box.

    Lines longer than the box are wrapped rather than overflowing the border.

    Args:
        lines (list[str]): Lines of text to center inside the box.
        width (int): Total width of the box (including borders).
        padding (int): Spaces between border and text.

    Returns:
        str: The framed text.
    """
    content_width = width - 2 * padding - 2  # 2 for border pipes
    horizontal = "=" * width
    box = [horizontal]
    for line in lines:
        for piece in textwrap.wrap(line, content_width) or [""]:
            box.append(f"{' ' * padding}|{piece.center(content_width)}|")
    box.append(horizontal)
    return "\n".join(box)


def format_table(rows: Iterable[Sequence], headers: Sequence[str], floatfmt: str = ".4f") -> str:
    """Plain-text table for console summaries; missing values print as '-'."""
    return tabulate(list(rows), headers=list(headers), floatfmt=floatfmt, missingval="-")
