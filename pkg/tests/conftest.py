import pytest

ACCEPTANCE = []


@pytest.fixture(scope="session")
def warm():
    """Compile the numba kernels once so timing budgets measure the solver."""
    from knaster import MAX_GAIN, SolverConfig, builtin, grid_fixed_points, solve, sperner_parity
    res = solve(builtin("contraction-eps", 3), SolverConfig(max_steps=12, labeling=MAX_GAIN))
    sperner_parity(res.mesh)
    grid_fixed_points(builtin("half", 2), 8)


@pytest.fixture
def criterion(warm):
    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
