"""Acceptance suite: one test per criterion, run at the stated tolerance.

Each criterion prints a [PASS]/[FAIL] line (see conftest). Wall-clock
budgets are asserted where the criterion states one.
"""

from __future__ import annotations

import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

import srrt.evaluation as ev
import srrt.regulator as reg
import srrt.trainkit as tk
from srrt.cli import main as cli_main
from srrt.geometry import (
    BoundingBox,
    RadiusCategory,
    iou,
    min_required_factor,
    rect_contains_box,
    resize_patch,
    search_region_rect,
    to_gray,
)
from srrt.pipeline import PipelineConfig, fixed_sr_track_sequence, srrt_track_sequence
from srrt.sequences import write_sequence
from srrt.trackers import ncc_track

from conftest import random_box
from test_regulator import loop_correlate

SR2, SR4, SR6, SR8 = RadiusCategory


def bisect_min_factor(prev: BoundingBox, cur: BoundingBox) -> float:
    """Containment-search oracle: no closed form, only the region
    constructor and the containment predicate."""
    hi = 1.0
    while not rect_contains_box(search_region_rect(prev, hi), cur):
        hi *= 2.0
    lo = 0.0
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        if rect_contains_box(search_region_rect(prev, mid), cur):
            hi = mid
        else:
            lo = mid
    return hi


def test_c01_geometry_oracle_equivalence():
    """10,000 random box pairs: closed form vs brute-force containment
    search within 1e-6 relative, in under 5 seconds."""
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        prev = random_box(rng)
        cur = random_box(rng)
        closed = min_required_factor(prev, cur)
        oracle = bisect_min_factor(prev, cur)
        worst = max(worst, abs(closed - oracle) / oracle)
    elapsed = time.perf_counter() - start
    assert worst <= 1e-6, f"worst relative deviation {worst}"
    assert elapsed < 5.0, f"oracle sweep took {elapsed:.2f}s"


def test_c02_min_sr_distribution_mechanism(tmp_path):
    """Planted transition fractions (90% <=2, 7% in (2,4], 2% in (4,6],
    1% > 6) are reproduced exactly by the stats command; real LaSOT
    ground truth, when present on disk, shows an SR2 fraction near
    0.973."""
    factors = [1.5] * 90 + [3.0] * 7 + [5.0] * 2 + [7.0] * 1
    shuffle_rng = np.random.default_rng(7)
    shuffle_rng.shuffle(factors)
    track = ev.planted_factor_track(BoundingBox(100, 100, 10, 10), factors, shuffle_rng)
    seq = ev.gt_only_sequence("planted", track, image_size=(32, 32))
    dataset = tmp_path / "data"
    write_sequence(seq, dataset / "planted")

    out = tmp_path / "stats.json"
    assert cli_main(["stats", "--dataset", str(dataset), "--output", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["counts"] == {"SR2": 90, "SR4": 7, "SR6": 2, "SR8": 1}
    assert payload["fractions"] == {"SR2": 0.90, "SR4": 0.07, "SR6": 0.02, "SR8": 0.01}

    # Optional large-scale check, only when the real benchmark is on disk.
    lasot = os.environ.get("SRRT_LASOT_DIR", "")
    if lasot and Path(lasot).is_dir():
        from srrt.sequences import load_dataset

        dist = ev.min_sr_distribution(load_dataset(lasot))
        assert abs(dist.fractions()[SR2] - 0.973) <= 0.01


def teleport_sequence():
    # 53 px jump of a 24 px target: factor 5.42, outside the 2x region
    # but inside the 6x region.
    spec = ev.MotionSpec(
        length=60, image_size=(400, 300), target_size=(24, 24),
        law="scripted", velocity=(0, 0), jumps=((30, 53, 0),), texture_seed=3,
    )
    return ev.generate_synthetic_sequence(spec, np.random.default_rng(0), name="teleport")


def post_jump_mean_iou(traj, seq, jump_frame=30) -> float:
    vals = [iou(r.box, seq.gt[r.frame]) for r in traj.records if r.frame >= jump_frame]
    return float(np.mean(vals))


def test_c03_paradigm_benefit_on_teleport():
    """Fixed SR2 stays lost after the jump (mean IoU < 0.1) while the
    regulated run with the same tracker and seed recovers (> 0.5), in
    under 10 seconds."""
    start = time.perf_counter()
    seq = teleport_sequence()
    cfg = PipelineConfig(regulator="oracle", tracker="oracle", noise_sigma=0.0, seed=12)
    regulated = srrt_track_sequence(seq, cfg)
    fixed = fixed_sr_track_sequence(seq, SR2, cfg)
    elapsed = time.perf_counter() - start
    assert post_jump_mean_iou(regulated, seq) > 0.5
    assert post_jump_mean_iou(fixed, seq) < 0.1
    assert elapsed < 10.0, f"teleport scenario took {elapsed:.2f}s"


@pytest.mark.parametrize("tracker,sigma", [("oracle", 1.5), ("ncc", 0.0)])
def test_c04_degenerate_equivalence(tracker, sigma):
    """Restricting regulation to one category reproduces the fixed-radius
    run bit for bit (wall-clock latency exempt, as stated by the
    determinism contract)."""
    spec = ev.MotionSpec(length=16, image_size=(240, 180), target_size=(20, 20),
                         law="constant", velocity=(1, 1), texture_seed=5)
    seq = ev.generate_synthetic_sequence(spec, np.random.default_rng(2))
    categories = list(RadiusCategory) if tracker == "oracle" else [SR2, SR8]
    for category in categories:
        cfg = PipelineConfig(
            regulator="oracle" if tracker == "oracle" else "classical",
            tracker=tracker, noise_sigma=sigma, noise_sigma_scale=0.05,
            seed=31, categories=(category,),
        )
        restricted = srrt_track_sequence(seq, cfg)
        fixed = fixed_sr_track_sequence(seq, category, cfg)
        assert restricted.same_tracking(fixed), f"mismatch for {category.name} / {tracker}"


def test_c05_ldu_update_count_formula():
    """Over 1,000 random category sequences and K in {1, 3, 5}, the
    number of dynamic-reference updates equals the sum of len(run) // K
    over maximal SR2 runs."""
    image = np.random.default_rng(0).integers(0, 256, (1, 48, 48)).astype(np.float64)
    box = BoundingBox(24, 24, 12, 12)
    rng = np.random.default_rng(55)
    sequences = []
    for _ in range(1000):
        length = int(rng.integers(4, 36))
        cats = [SR2 if rng.random() < 0.55 else RadiusCategory(int(rng.choice([4, 6, 8])))
                for _ in range(length)]
        sequences.append(cats)

    for locking in (1, 3, 5):
        for cats in sequences:
            state = reg.init_state(image, box, locking_threshold=locking, mode="nearest")
            updates = 0
            for cat in cats:
                before = state.last_update_frame
                state = reg.ldu_step(state, cat, box, image, mode="nearest")
                updates += state.last_update_frame != before
            expected = 0
            run = 0
            for cat in cats:
                if cat is SR2:
                    run += 1
                else:
                    expected += run // locking
                    run = 0
            expected += run // locking
            assert updates == expected


def test_c06_cross_entropy_correctness(rng):
    """Hand-computed values to 1e-9 and non-negativity over 10,000 random
    normalized batches."""
    assert tk.cross_entropy([[1.0, 0.0, 0.0, 0.0]], [SR2]) == pytest.approx(0.0, abs=1e-9)
    got = tk.cross_entropy([[0.25, 0.25, 0.25, 0.25]], [SR4])
    assert got == pytest.approx(math.log(4.0), abs=1e-9)
    assert got == pytest.approx(1.386294, abs=5e-7)

    sizes = rng.integers(1, 9, size=10_000)
    for n in sizes:
        probs = rng.dirichlet(np.ones(4), size=int(n))
        labels = [RadiusCategory(int(c)) for c in rng.choice([2, 4, 6, 8], size=int(n))]
        assert tk.cross_entropy(probs, labels) >= 0.0


def random_walk_gt(length: int, seed: int) -> list[BoundingBox]:
    rng = np.random.default_rng(seed)
    boxes = [BoundingBox(200.0, 200.0, 20.0, 20.0)]
    for _ in range(length - 1):
        prev = boxes[-1]
        dx, dy = rng.integers(-3, 4, 2)
        boxes.append(BoundingBox(prev.cx + dx, prev.cy + dy, prev.w, prev.h))
    return boxes


def test_c07_sampler_ratio_and_labels():
    """10,000 draws under round-robin targets split exactly 1:1:1:1;
    every stored label re-verifies through the labeler and every frame
    spread stays within 100."""
    sequences = [ev.gt_only_sequence(f"walk{i}", random_walk_gt(150, i)) for i in range(5)]
    rng = np.random.default_rng(77)
    samples = tk.generate_training_set(sequences, 10_000, rng, materialize=False)

    counts = {c: 0 for c in RadiusCategory}
    for sample in samples:
        counts[sample.label] += 1
        assert tk.label_category(sample.candidate_rect, sample.gt) is sample.label
        assert sample.provenance.spread() <= 100
    assert counts == {SR2: 2500, SR4: 2500, SR6: 2500, SR8: 2500}


def test_c08_latency_ordering():
    """On one 300-frame synthetic input: median fixed-radius latency is
    strictly ordered SR2 < SR4 < SR6, and the regulated run's median on
    this low-motion sequence falls inside the [SR2, SR6] bounds; the
    whole comparison stays under 60 seconds."""
    start = time.perf_counter()
    spec = ev.MotionSpec(length=301, image_size=(400, 300), target_size=(28, 28),
                         start=(20, 136), law="constant", velocity=(1, 0), texture_seed=8)
    seq = ev.generate_synthetic_sequence(spec, np.random.default_rng(4))
    cfg = PipelineConfig(regulator="classical", tracker="ncc", seed=0)

    medians = {}
    for cat in (SR2, SR4, SR6):
        _, stats = ev.latency_benchmark(
            lambda s, c=cat: fixed_sr_track_sequence(s, c, cfg), seq, warmup=20
        )
        medians[cat] = stats.median_ms
    _, srrt_stats = ev.latency_benchmark(lambda s: srrt_track_sequence(s, cfg), seq, warmup=20)
    elapsed = time.perf_counter() - start

    assert medians[SR2] < medians[SR4] < medians[SR6], medians
    assert medians[SR2] <= srrt_stats.median_ms <= medians[SR6], (medians, srrt_stats)
    assert elapsed < 60.0, f"latency comparison took {elapsed:.1f}s"


def test_c09_metric_suite(rng):
    """Perfect trajectory scores AUC 20/21, P 1, P_norm 1; an all-lost
    one scores 0; success curves are monotone over 1,000 random
    trajectories."""
    from test_evaluation import traj_from_boxes

    gt = BoundingBox(100, 100, 16, 16)
    perfect = traj_from_boxes([gt] * 25)
    curve = ev.success_curve(perfect, [gt] * 25)
    prec = ev.precision_curves(perfect, [gt] * 25)
    assert curve.auc == pytest.approx(20 / 21, abs=1e-12)
    assert prec.p == 1.0 and prec.p_norm == 1.0

    lost = traj_from_boxes([BoundingBox(900, 900, 16, 16)] * 25)
    lost_curve = ev.success_curve(lost, [gt] * 25)
    lost_prec = ev.precision_curves(lost, [gt] * 25)
    assert lost_curve.auc == 0.0 and lost_prec.p == 0.0

    for _ in range(1000):
        n = int(rng.integers(1, 20))
        boxes = [
            BoundingBox(
                gt.cx + rng.uniform(-30, 30), gt.cy + rng.uniform(-30, 30),
                gt.w * rng.uniform(0.3, 3.0), gt.h * rng.uniform(0.3, 3.0),
            )
            for _ in range(n)
        ]
        rates = ev.success_curve(traj_from_boxes(boxes), [gt] * n).rates
        assert (np.diff(rates) <= 1e-12).all()


def test_c10_correlation_oracle(rng):
    """depthwise correlation equals a nested-loop reference on 500 random
    small inputs within 1e-9 relative; template planting moves the match
    argmax exactly."""
    for _ in range(500):
        chans = int(rng.integers(1, 9))
        kh, kw = (int(v) for v in rng.integers(1, 6, 2))
        height = int(rng.integers(kh, 17))
        width = int(rng.integers(kw, 17))
        cand = rng.normal(size=(chans, height, width))
        ref = rng.normal(size=(chans, kh, kw))
        got = reg.depthwise_correlate(reg.FeatureMap(ref, 8), reg.FeatureMap(cand, 8)).values
        want = loop_correlate(cand, ref)
        scale = np.abs(want).max() + 1e-30
        assert (np.abs(got - want) / scale).max() <= 1e-9

    template = rng.uniform(0, 255, (128, 128))
    from test_trackers import ncc_handle, patch_of

    handle = ncc_handle(template)
    kernel = to_gray(resize_patch(handle.template, 64).pixels)
    base = rng.uniform(0, 255, (128, 128))
    for _ in range(100):
        dy, dx = (int(v) for v in rng.integers(0, 65, 2))
        search = base.copy()
        search[dy : dy + 64, dx : dx + 64] = kernel
        _, box, _ = ncc_track(handle, patch_of(search))
        assert (box.cx - 32.0, box.cy - 32.0) == (float(dx), float(dy))
