"""Acceptance suite: every gate criterion at its stated tolerance.

Each test prints one PASS/FAIL line so a full run reads as a checklist.
The synthetic trend criteria use per-image-mean mIoU over a frozen seeded
scene suite; directions mirror the published label-placement results.
"""

import contextlib
import os
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from pointprop import edt, expert, metrics, placement, synthetic, tensor_io
from pointprop.embedding import FeatureField, build_field, l2_normalize
from pointprop.propagation import LabeledPointSet, propagate
from pointprop.proposal import (
    HilConfig,
    HilSession,
    ProposalState,
    add_label_to_state,
    refresh_maps,
    run_hil_session,
)
from pointprop.service import create_app

TOL = 1e-6


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def random_field(rng, h, w, d):
    data, _ = l2_normalize(rng.normal(size=(h, w, d)).astype(np.float32))
    return FeatureField(data=data)


def random_labels(rng, field, n):
    coords = set()
    while len(coords) < n:
        coords.add((int(rng.integers(0, field.width)),
                    int(rng.integers(0, field.height))))
    return LabeledPointSet.from_points(
        field, [(x, y, int(rng.integers(0, 8))) for x, y in sorted(coords)]
    )


def test_knn_oracle_equivalence():
    """propagate == exhaustive per-pixel argmax oracle, 100 instances, <10 s."""
    rng = np.random.default_rng(1234)
    started = time.perf_counter()
    with criterion("knn-oracle-equivalence"):
        for _ in range(100):
            field = random_field(rng, 32, 32, 8)
            labels = random_labels(rng, field, int(rng.integers(5, 26)))
            mask = propagate(field, labels, k=1)
            emb = labels.embedding_matrix()
            class_ids = labels.class_ids()
            pinned = {(p.x, p.y): p.class_id for p in labels}
            for y in range(32):
                sims_rows = field.data[y].astype(np.float64) @ emb.T
                for x in range(32):
                    expected = pinned.get((x, y))
                    if expected is None:
                        sims = sims_rows[x].tolist()
                        best = 0
                        for i in range(1, len(sims)):
                            if sims[i] > sims[best]:
                                best = i
                        expected = class_ids[best]
                    assert mask[y, x] == expected
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def test_distance_transform_oracle_equivalence():
    """distance_map == brute-force min distance on 100 random 64x64 sets."""
    rng = np.random.default_rng(4321)
    with criterion("edt-oracle-equivalence"):
        for _ in range(100):
            n = int(rng.integers(1, 50))
            flat = rng.choice(64 * 64, size=n, replace=False)
            coords = [(int(i % 64), int(i // 64)) for i in flat]
            got = edt.distance_map(coords, 64, 64)
            xs = np.array([c[0] for c in coords], dtype=np.float64)
            ys = np.array([c[1] for c in coords], dtype=np.float64)
            yy, xx = np.meshgrid(np.arange(64), np.arange(64), indexing="ij")
            oracle = np.sqrt(
                ((yy[..., None] - ys) ** 2 + (xx[..., None] - xs) ** 2).min(-1)
            )
            assert np.abs(got - oracle).max() < TOL


def test_map_algebra():
    """Scratch recompute == incremental maps; M = 0 at labeled pixels;
    1000 fuzzed sessions never re-propose a labeled pixel."""
    with criterion("map-algebra"):
        rng = np.random.default_rng(99)
        # incremental vs from-scratch over random label sequences
        for _ in range(15):
            h, w = int(rng.integers(8, 20)), int(rng.integers(8, 20))
            field = random_field(rng, h, w, 6)
            cfg = HilConfig(
                budget=12,
                similarity_weight=float(rng.uniform(0.5, 4.0)),
                sigma=float(rng.uniform(1.0, 20.0)),
                initial_points=1,
            )
            state = ProposalState.blank(h, w)
            points = []
            taken = set()
            for _ in range(int(rng.integers(2, 12))):
                x, y = int(rng.integers(0, w)), int(rng.integers(0, h))
                if (x, y) in taken:
                    continue
                taken.add((x, y))
                from pointprop.propagation import LabeledPoint
                label = LabeledPoint(x, y, 0, field.vector_at(x, y))
                points.append(label)
                add_label_to_state(state, field, label, cfg)

                scratch = ProposalState.blank(h, w)
                emb = np.stack([p.embedding for p in points]).astype(np.float64)
                flat = field.data.reshape(-1, field.dim).astype(np.float64)
                scratch.max_sim = (flat @ emb.T).max(axis=1).reshape(h, w)
                scratch.dist = edt.distance_map([(p.x, p.y) for p in points], h, w)
                refresh_maps(scratch, cfg)

                assert np.abs(state.max_sim - scratch.max_sim).max() < TOL
                assert np.abs(state.dist - scratch.dist).max() < TOL
                assert np.abs(state.smooth_dist - scratch.smooth_dist).max() < TOL
                assert np.abs(state.selection - scratch.selection).max() < TOL
                # M exactly zero at every labeled pixel, every iteration
                assert np.abs(state.selection[state.labeled]).max() == 0.0

        # 1000 fuzzed sessions: a proposal never hits a labeled pixel
        for i in range(1000):
            srng = np.random.default_rng([7, i])
            h, w = int(srng.integers(6, 12)), int(srng.integers(6, 12))
            field = random_field(srng, h, w, 4)
            budget = int(srng.integers(2, 9))
            cfg = HilConfig(
                budget=budget,
                similarity_weight=float(srng.uniform(0.5, 4.0)),
                sigma=float(srng.uniform(1.0, 12.0)),
                initial_points=int(srng.integers(1, min(4, budget) + 1)),
            )
            session = HilSession(field, cfg)
            seeds = set()
            while len(seeds) < cfg.seed_count:
                seeds.add((int(srng.integers(0, w)), int(srng.integers(0, h))))
            for x, y in seeds:
                session.add_label(x, y, int(srng.integers(0, 4)))
            while session.phase == "proposing":
                x, y, _ = session.next_proposal()
                assert not session.state.labeled[y, x]
                assert not session.labels.has_coord(x, y)
                session.add_label(x, y, int(srng.integers(0, 4)))


def test_known_value_checks():
    """Frozen constants from the smoothing, combination and metric formulas."""
    with criterion("known-values"):
        from pointprop.proposal import combine, smooth_distance

        assert smooth_distance(np.array([50.0]), 50.0)[0] == pytest.approx(
            0.393469, abs=TOL
        )
        assert combine(np.array([0.04]), np.array([0.393469]), 2.2)[0] == \
            pytest.approx(0.150459, abs=TOL)
        gt = np.array([[0, 0], [1, 1]], dtype=np.uint8)
        pred = np.array([[0, 1], [1, 1]], dtype=np.uint8)
        cm = metrics.accumulate(gt, pred, 2)
        assert metrics.pa(cm) == pytest.approx(0.75, abs=TOL)
        assert metrics.mpa(cm) == pytest.approx(0.75, abs=TOL)
        assert metrics.miou(cm) == pytest.approx(0.58333, abs=1e-5)
        assert metrics.miou(cm) == pytest.approx((0.5 + 2 / 3) / 2, abs=TOL)


def _scene_suite(n_scenes=20, master_seed=123, noise=0.2):
    params = synthetic.SceneParams(noise=noise)
    return [
        synthetic.generate_scene(params, np.random.default_rng([master_seed, i]))
        for i in range(n_scenes)
    ]


def _miou(scene, labels, k=1):
    field = FeatureField(data=scene.features)
    pred = propagate(field, labels, k=k)
    cm = metrics.accumulate(scene.mask, pred, int(scene.mask.max()) + 1)
    return metrics.miou(cm)


def test_desk_scale_trend_reproduction():
    """Synthetic suite at budget 5: mean mIoU HIL >= grid >= random, HIL
    beats random in >= 70% of seeds; k sweep peaks at k=1; mIoU is
    non-decreasing in budget (with a strict initial rise).  The published
    absolute numbers require the real dataset and extractor weights and are
    NOT reproduced here; only the orderings are.  Runtime < 5 min."""
    started = time.perf_counter()
    with criterion("desk-scale-trends"):
        scenes = _scene_suite()
        hil5, grid5, rand5 = [], [], []
        labels5_per_scene = []
        for i, scene in enumerate(scenes):
            field = FeatureField(data=scene.features)
            h, w = scene.mask.shape
            cfg = HilConfig(budget=5, initial_points=10)
            labels = run_hil_session(field, expert.SimulatedExpert(scene.mask), cfg)
            labels5_per_scene.append((scene, labels))
            hil5.append(_miou(scene, labels))
            gpts = placement.grid_points(h, w, 5)
            grid5.append(_miou(scene, LabeledPointSet.from_points(
                field, [(x, y, int(scene.mask[y, x])) for x, y in gpts])))
            rpts = placement.random_points(h, w, 5, seed=1000 + i)
            rand5.append(_miou(scene, LabeledPointSet.from_points(
                field, [(x, y, int(scene.mask[y, x])) for x, y in rpts])))

        mean_hil, mean_grid, mean_rand = map(
            lambda v: float(np.mean(v)), (hil5, grid5, rand5))
        assert mean_hil >= mean_grid >= mean_rand, \
            f"ordering violated: {mean_hil:.3f} / {mean_grid:.3f} / {mean_rand:.3f}"
        wins = sum(1 for a, b in zip(hil5, rand5) if a > b)
        assert wins >= 0.7 * len(scenes), f"HIL beat random in only {wins}/20 seeds"

        # k sweep on the same budget-5 HIL label sets
        k_means = {
            k: float(np.mean([_miou(scene, labels, k=k)
                              for scene, labels in labels5_per_scene]))
            for k in (1, 3, 5)
        }
        assert k_means[1] == max(k_means.values()), f"k sweep: {k_means}"

        # budget growth (HIL sessions per budget)
        budget_means = []
        for budget in (5, 10, 25, 100):
            vals = []
            for scene in scenes:
                field = FeatureField(data=scene.features)
                cfg = HilConfig(budget=budget, initial_points=10)
                labels = run_hil_session(
                    field, expert.SimulatedExpert(scene.mask), cfg)
                vals.append(_miou(scene, labels))
            budget_means.append(float(np.mean(vals)))
        # Non-decreasing up to saturation jitter: once the suite hits
        # mIoU ~ 1.0 individual pixels flip either way at the 1e-4 level.
        assert all(b >= a - 1e-3 for a, b in zip(budget_means, budget_means[1:])), \
            f"budget curve not monotone: {budget_means}"
        assert budget_means[-1] > budget_means[0], \
            f"budget curve never rises: {budget_means}"

        elapsed = time.perf_counter() - started
        assert elapsed < 300.0, f"took {elapsed:.0f}s"


@pytest.mark.skipif(
    "POINTPROP_UCSD_ROOT" not in os.environ,
    reason="full reproduction needs the real dataset and extracted features "
           "(set POINTPROP_UCSD_ROOT to a features/+masks/ tree)",
)
def test_optional_full_reproduction_ucsd():
    """HIL@5 on real denoised features targets PA 71.56 / mIoU 52.60 +/- 2."""
    from pointprop import harness

    with criterion("ucsd-full-reproduction"):
        spec = harness.ExperimentSpec(
            dataset_root=os.environ["POINTPROP_UCSD_ROOT"],
            placement="hil",
            budgets=[5],
            num_classes=34,
            ignore_ids=[255, int(os.environ.get("POINTPROP_UNIDENTIFIED_ID", 33))],
            exclusion_list=os.environ.get("POINTPROP_UCSD_EXCLUSIONS"),
        )
        report = harness.run(spec)
        agg = report["aggregates"][0]["dataset"]
        assert abs(agg["pa"] * 100 - 71.56) <= 2.0
        assert abs(agg["miou"] * 100 - 52.60) <= 2.0


def test_service_replay_equivalence(tmp_path):
    """50 scripted HTTP sessions == the library loop, byte for byte."""
    with criterion("service-replay-equivalence"):
        params = synthetic.SceneParams(height=16, width=16, classes=3, dim=6,
                                       noise=0.15)
        synthetic.generate_dataset(tmp_path, scenes=10, seed=77, params=params)
        app = create_app(data_root=tmp_path, max_sessions=128)
        with TestClient(app) as client:
            for run_idx in range(50):
                image_id = f"scene_{run_idx % 10:04d}"
                gt = tensor_io.read_mask(tmp_path / "masks" / f"{image_id}.png")
                budget = 4 + (run_idx % 4)
                initial = 1 + (run_idx % 3)
                resp = client.post("/sessions", json={
                    "image_id": image_id,
                    "evaluation": True,
                    "config": {"budget": budget, "initial_points": initial,
                               "sigma": 4.0},
                })
                assert resp.status_code == 201
                sid = resp.json()["session_id"]
                for p in resp.json()["suggested_seed_points"]:
                    r = client.post(f"/sessions/{sid}/labels", json=p)
                    assert r.status_code == 200
                while True:
                    r = client.get(f"/sessions/{sid}/proposal")
                    if r.status_code == 409:
                        break
                    p = r.json()
                    r = client.post(f"/sessions/{sid}/labels", json={
                        "x": p["x"], "y": p["y"],
                        "class_id": int(gt[p["y"], p["x"]]),
                    })
                    assert r.status_code == 200
                served = [(l["x"], l["y"], l["class_id"]) for l in
                          client.get(f"/sessions/{sid}/labels").json()["labels"]]
                served_mask = tensor_io.mask_from_png_bytes(
                    client.get(f"/sessions/{sid}/mask").content)

                patch = tensor_io.read_tensor(
                    tmp_path / "features" / f"{image_id}.ftns")
                field = build_field(patch, gt.shape[0], gt.shape[1])
                cfg = HilConfig(budget=budget, initial_points=initial, sigma=4.0)
                offline = run_hil_session(field, expert.SimulatedExpert(gt), cfg)
                assert served == offline.as_rows()
                offline_mask = propagate(field, offline, k=1)
                assert served_mask.tobytes() == offline_mask.tobytes()


def test_round_trip_and_fuzz_suites(tmp_path):
    """1000 random artifacts per format round-trip losslessly; corrupted
    FTNS headers are always rejected."""
    with criterion("round-trip-fuzz"):
        rng = np.random.default_rng(2718)
        for _ in range(1000):
            shape = tuple(int(rng.integers(1, 5)) for _ in range(3))
            t = rng.normal(size=shape).astype(np.float32)
            back = tensor_io.read_tensor_bytes(tensor_io.tensor_to_bytes(t))
            assert back.shape == t.shape and back.tobytes() == t.tobytes()
        for _ in range(1000):
            h, w = int(rng.integers(1, 12)), int(rng.integers(1, 12))
            mask = rng.integers(0, 256, size=(h, w), dtype=np.uint8)
            back = tensor_io.mask_from_png_bytes(tensor_io.mask_to_png_bytes(mask))
            assert np.array_equal(back, mask)
        csv_path = tmp_path / "pts.csv"
        for _ in range(1000):
            n = int(rng.integers(0, 12))
            points = [
                (int(rng.integers(0, 512)), int(rng.integers(0, 512)),
                 int(rng.integers(0, 256)))
                for _ in range(n)
            ]
            tensor_io.write_points(points, csv_path)
            assert tensor_io.read_points(csv_path) == points
        # header fuzz: every byte position, many values
        t = rng.normal(size=(3, 2, 2)).astype(np.float32)
        good = tensor_io.tensor_to_bytes(t)
        header_len = 4 + 2 + 1 + 1 + 3 * 4
        rejected = 0
        for position in range(header_len):
            for value in range(0, 256, 5):
                if value == good[position]:
                    continue
                corrupted = bytearray(good)
                corrupted[position] = value
                with pytest.raises(Exception):
                    tensor_io.read_tensor_bytes(bytes(corrupted))
                rejected += 1
        assert rejected >= 900
