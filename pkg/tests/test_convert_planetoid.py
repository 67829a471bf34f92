"""Exercise the planetoid converter on a miniature synthetic raw bundle."""

import pickle
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

from gamlp.data import load_dataset

SCRIPT = Path(__file__).resolve().parent.parent / "scripts" / "convert_planetoid.py"


def _dump(path, obj):
    with open(path, "wb") as f:
        pickle.dump(obj, f, protocol=2)


def make_raw(raw_dir, with_gap):
    """8-node toy in planetoid form.

    Nodes 0-1 train, 2-3 "validation pool", 4-7 test; when ``with_gap``
    is set, node 6 is missing from test.index (isolated-node path).
    """
    raw_dir.mkdir(parents=True)
    f_dim, c = 3, 2
    rng = np.random.default_rng(0)
    allx = rng.random((4, f_dim)).astype(np.float32)  # nodes 0..3
    ally = np.eye(c, dtype=np.int32)[[0, 1, 0, 1]]
    x, y = allx[:2], ally[:2]
    # tx row j belongs to node test_index[j]; the real files are unsorted
    if with_gap:
        test_index = np.array([7, 4, 5])  # node 6 missing
        tx = rng.random((3, f_dim)).astype(np.float32)
        ty = np.eye(c, dtype=np.int32)[[0, 1, 0]]
    else:
        test_index = np.array([6, 4, 7, 5])
        tx = rng.random((4, f_dim)).astype(np.float32)
        ty = np.eye(c, dtype=np.int32)[[0, 1, 0, 1]]
    graph = {0: [1, 4], 1: [0, 2], 2: [1, 3], 3: [2, 5], 4: [0], 5: [3, 7],
             6: [], 7: [5]}
    name = "toy"
    _dump(raw_dir / f"ind.{name}.x", sp.csr_matrix(x))
    _dump(raw_dir / f"ind.{name}.y", y)
    _dump(raw_dir / f"ind.{name}.tx", sp.csr_matrix(tx))
    _dump(raw_dir / f"ind.{name}.ty", ty)
    _dump(raw_dir / f"ind.{name}.allx", sp.csr_matrix(allx))
    _dump(raw_dir / f"ind.{name}.ally", ally)
    _dump(raw_dir / f"ind.{name}.graph", graph)
    np.savetxt(raw_dir / f"ind.{name}.test.index", test_index, fmt="%d")
    return allx, tx, test_index


@pytest.mark.parametrize("with_gap", [False, True])
def test_converter_round_trip(tmp_path, with_gap):
    raw = tmp_path / "raw"
    allx, tx, test_index = make_raw(raw, with_gap)
    out = tmp_path / "data" / "toy"
    result = subprocess.run(
        [sys.executable, str(SCRIPT), "--raw-dir", str(raw), "--name", "toy",
         "--out", str(out), "--val-size", "2"],
        capture_output=True, text=True)
    assert result.returncode == 0, result.stderr

    ds = load_dataset(out)
    assert ds.n == 8
    assert ds.splits.train.tolist() == [0, 1]
    assert ds.splits.val.tolist() == [2, 3]
    assert ds.splits.test.tolist() == sorted(test_index.tolist())
    # train features land at the front in original order
    assert np.allclose(ds.features[:4], allx, atol=1e-7)
    if with_gap:
        assert ds.labels[6] == -1          # padded isolated node stays unlabeled
        assert not ds.features[6].any()    # zero feature row
        assert np.allclose(ds.features[[4, 5, 7]], tx, atol=1e-7)
    else:
        assert np.allclose(ds.features[4:], tx, atol=1e-7)
    # undirected edges from the neighbor dict
    assert ds.graph.degrees()[0] == 2  # neighbors 1 and 4
