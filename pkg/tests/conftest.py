import random

from rach.patterns import Codebook

# filled in by test_acceptance.py; printed after the run so each criterion
# gets a visible pass/fail line even under output capture
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=str):
        ok, detail = ACCEPTANCE_RESULTS[key]
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)


def random_codebook(rng: random.Random, n_max: int = 10, size_max: int = 12) -> Codebook:
    """A random codebook of distinct nonzero patterns."""
    n = rng.randint(2, n_max)
    max_size = min(size_max, (1 << n) - 1)
    size = rng.randint(2, max_size)
    masks = rng.sample(range(1, 1 << n), size)
    return Codebook.from_masks(n, masks)
