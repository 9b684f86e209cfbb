"""External SMT solver invocation: one process per query, script on stdin."""

from __future__ import annotations

import os
import shutil
import subprocess
from dataclasses import dataclass

SOLVER_ENV = "LX_SOLVER"
DEFAULT_SOLVER = "z3"


class SolverNotFound(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverResult:
    status: str  # sat | unsat | timeout | unknown | error
    model: str = ""
    diagnostics: str = ""


def find_solver(path: str | None = None) -> str:
    """Resolve the solver binary from ``path``, ``$LX_SOLVER`` or ``z3`` on PATH."""
    candidate = path or os.environ.get(SOLVER_ENV) or DEFAULT_SOLVER
    resolved = shutil.which(candidate)
    if resolved is None:
        raise SolverNotFound(f"SMT solver {candidate!r} not found")
    return resolved


def solver_command(binary: str) -> list[str]:
    name = os.path.basename(binary).lower()
    if name.startswith("z3"):
        return [binary, "-in", "-smt2"]
    if name.startswith("cvc"):
        return [binary, "--lang=smt2", "--produce-models", "-"]
    return [binary]


def invoke_solver(script: str, timeout: float = 10.0, solver: str | None = None) -> SolverResult:
    """Run one script; the first output line is the check-sat answer."""
    binary = find_solver(solver)
    try:
        proc = subprocess.run(solver_command(binary), input=script, capture_output=True, text=True,
                              timeout=timeout)
    except subprocess.TimeoutExpired:
        return SolverResult("timeout", diagnostics=f"no answer within {timeout}s")
    out = proc.stdout.strip()
    first, _, rest = out.partition("\n")
    first = first.strip()
    if first in ("sat", "unsat", "unknown"):
        if first == "sat" and "(error" in rest:
            return SolverResult("error", diagnostics=rest.strip())
        return SolverResult(first, model=rest if first == "sat" else "")
    if first == "timeout":
        return SolverResult("timeout")
    return SolverResult("error", diagnostics=(out + "\n" + proc.stderr).strip())


__all__ = ["SolverResult", "SolverNotFound", "find_solver", "invoke_solver", "SOLVER_ENV"]
