import os
from pathlib import Path

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from subspace_faces.dataset import Dataset, write_pgm

ORL_ENV = "SUBSPACE_FACES_ORL"
ORL_CANDIDATES = ("data/orl", "data/att_faces", "data/orl_faces", "~/orl_faces", "~/att_faces")


def make_faces(n_subjects=8, per_subject=6, shape=(24, 18), seed=0, spread=0.25):
    """Smooth per-subject prototypes plus smooth within-subject variation, clipped to [0, 1]."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for s in range(n_subjects):
        proto = gaussian_filter(rng.random(shape), 2.0)
        proto = (proto - proto.min()) / (proto.max() - proto.min())
        for _ in range(per_subject):
            v = proto + spread * gaussian_filter(rng.standard_normal(shape), 1.5)
            v += 0.03 * rng.standard_normal(shape)
            images.append(np.clip(v, 0.0, 1.0))
            labels.append(f"s{s + 1}")
    return Dataset.from_arrays(np.array(images), labels)


def write_corpus(root: Path, d: Dataset) -> Path:
    for s in d:
        sub = root / s.label
        sub.mkdir(parents=True, exist_ok=True)
        (sub / f"{s.source_index + 1}.pgm").write_bytes(write_pgm(s.pixels))
    return root


@pytest.fixture
def faces():
    return make_faces()


@pytest.fixture
def face_corpus(tmp_path):
    d = make_faces(n_subjects=5, per_subject=4, shape=(16, 12), seed=3)
    return write_corpus(tmp_path / "corpus", d)


def find_orl():
    env = os.environ.get(ORL_ENV)
    candidates = [env] if env else []
    repo = Path(__file__).resolve().parent.parent
    for c in ORL_CANDIDATES:
        p = Path(c).expanduser()
        candidates.append(str(p if p.is_absolute() else repo / p))
    for c in candidates:
        if c and Path(c, "s1").is_dir():
            return Path(c)
    return None


@pytest.fixture(scope="session")
def orl_root():
    root = find_orl()
    if root is None:
        pytest.skip(f"ORL corpus not found (set {ORL_ENV} to the directory holding s1..s40)")
    return root


# ---------------------------------------------------------------------------
# one line per acceptance criterion in the terminal summary
# ---------------------------------------------------------------------------

_acceptance: list = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = dict(item.user_properties).get("detail", "")
        if rep.skipped:
            reason = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else str(rep.longrepr)
            detail = reason.replace("Skipped: ", "")
        _acceptance.append((marker.args[0], rep.outcome.upper(), item.name, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status, name, detail in sorted(_acceptance, key=lambda r: r[0]):
        line = f"[{status:7s}] {criterion:5s} {name}"
        if detail:
            line += f"  -- {detail}"
        terminalreporter.write_line(line)
