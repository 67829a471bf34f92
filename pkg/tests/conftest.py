"""Shared fixtures, dense oracles, and the acceptance summary printer."""

import numpy as np
import pytest

from gamlp.graph import add_self_loops, build_graph, normalize


def random_graph(rng, n, p=0.2):
    """Erdos-Renyi graph as a CsrGraph (no self loops)."""
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return build_graph(np.stack([iu[keep], ju[keep]], axis=1), n)


def dense_ahat(graph, r):
    """Dense normalization oracle: D^(r-1) (A + I) D^(-r) from scratch."""
    a = graph.to_dense()
    if not graph.has_self_loops:
        a = a + np.eye(graph.n)
    d = a.sum(axis=1)
    return np.diag(d ** (r - 1.0)) @ a @ np.diag(d ** (-r))


def operator_for(graph, r):
    return normalize(add_self_loops(graph), r)


@pytest.fixture
def path3():
    """Path graph 0 - 1 - 2."""
    return build_graph([(0, 1), (1, 2)], 3)


# ---------------------------------------------------------------------------
# Acceptance reporting: one pass/fail line per criterion after the run.
# ---------------------------------------------------------------------------

_CRITERIA = {
    "test_criterion_1": "Cora GAMLP(JK) mean >= 82.5 and above in-repo SGC",
    "test_criterion_2": "Citeseer GAMLP(JK) mean >= 72.5 and near in-repo S2GC",
    "test_criterion_3": "PubMed GAMLP(R) mean >= 79.0",
    "test_criterion_4": "PubMed deep propagation: GAMLP(JK) stable, SGC collapses",
    "test_criterion_5": "PubMed label ablation: full GAMLP(R) >= plain-label variant",
    "test_criterion_6": "gradient suite (full model <= 1e-4, kernels <= 1e-6)",
    "test_criterion_7": "oracle suite (propagation <= 1e-10, attention vs dense)",
    "test_criterion_8": "invariant suite (>= 100 randomized cases each)",
    "test_criterion_9": "SGC equivalence (logits within 1e-12)",
}

_results = {}


def pytest_runtest_logreport(report):
    base = report.nodeid.split("::")[-1].split("[")[0]
    if "test_acceptance" not in report.nodeid or base not in _CRITERIA:
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        outcome = "SKIP" if report.skipped else report.outcome.upper()
        if report.skipped and isinstance(report.longrepr, tuple):
            outcome += f" ({report.longrepr[2].removeprefix('Skipped: ')})"
        prev = _results.get(base)
        if prev is None or "FAIL" in outcome:
            _results[base] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, desc in _CRITERIA.items():
        if name in _results:
            terminalreporter.write_line(
                f"[{name.removeprefix('test_')}] {_results[name]}: {desc}")
