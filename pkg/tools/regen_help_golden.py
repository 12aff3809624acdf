"""Rewrite tests/golden/help_*.txt from the current parser."""
import contextlib
import io
from pathlib import Path

from trirhomb.cli import COMMANDS, main

OUT = Path(__file__).resolve().parents[1] / "tests" / "golden"


def help_text(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        try:
            main(argv + ["--help"])
        except SystemExit:
            pass
    return buf.getvalue()


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    for name in ("top",) + COMMANDS:
        argv = [] if name == "top" else [name]
        (OUT / f"help_{name}.txt").write_text(help_text(argv))
        print("wrote", name)
