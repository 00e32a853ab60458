import math

import numpy as np
import pytest

from hyperlapse import CostWeights, EmptyCoverage
from hyperlapse.panorama import (
    FOV_DEFICIT,
    PanoramaCandidate,
    align_rigid,
    build_candidate,
    candidate_edge_weight,
    crop_energy,
    motion_terms,
    plan_panoramas,
    select_central_frames,
    solve_crop_centers,
    solve_crop_path,
    solve_panorama_sampling,
    union_area,
    warp_corners,
    windows,
)
from hyperlapse.synth import make_oscillating_trace, make_random_trace
from hyperlapse.trace import HIST_BINS, FrameMeta, HomographyLink, LinkSet, MotionTrace

from oracles import best_candidate_path


def translation(tx, ty=0.0):
    H = np.eye(3)
    H[0, 2] = tx
    H[1, 2] = ty
    return H


def trace_with_homs(consecutive, n=None, width=100, height=100, flow=1.0,
                    direction=(0.0, 0.0)):
    """Trace whose consecutive homographies are given explicitly."""
    n = n or len(consecutive) + 1
    src, dst = [], []
    for k in range(1, n):
        for i in range(n - k):
            src.append(i)
            dst.append(i + k)
    m = len(src)
    gaps = np.array(dst) - np.array(src)
    links = LinkSet(src, dst, [direction[0]] * m, [direction[1]] * m, [0] * m,
                    gaps.astype(float) * flow)
    homs = {}
    for t, H in enumerate(consecutive):
        if H is not None:
            homs[(t, t + 1)] = HomographyLink(t, t + 1, H, True)
        else:
            homs[(t, t + 1)] = HomographyLink(t, t + 1, np.eye(3), False)
    trace = MotionTrace(
        video_id="homs",
        fps=30,
        frames=[FrameMeta(i, i * 33.0, width, height) for i in range(n)],
        links=links,
        histograms=np.full((n, 3, HIST_BINS), 1.0 / HIST_BINS),
        homographies=homs,
    )
    trace.avg_flow = trace.consecutive_flow_mean()
    return trace


class TestCentralFrames:
    def test_linear_drift_picks_middle(self):
        # displacement back to window start grows linearly: (0,0),(1,0)...(4,0)
        trace = trace_with_homs([translation(-1.0)] * 4)
        centers = select_central_frames(trace, omega=5)
        assert centers == [2]

    def test_alternating_drift_picks_first_on_tie(self):
        # pos: (0,0),(2,0),(0,0),(2,0),(0,0) -> mean 0.8, argmin at pos 0 frames
        homs = [translation(-2.0), translation(2.0), translation(-2.0), translation(2.0)]
        trace = trace_with_homs(homs)
        centers = select_central_frames(trace, omega=5)
        assert centers == [0]

    def test_degenerate_window_every_frame_is_center(self):
        trace = trace_with_homs([translation(-1.0)] * 4)
        assert select_central_frames(trace, omega=1) == [0, 1, 2, 3, 4]

    def test_tracking_lost_splits_window(self):
        homs = [translation(-1.0), None, translation(-1.0), translation(-1.0)]
        trace = trace_with_homs(homs)
        assert windows(trace, omega=5) == [(0, 2), (2, 5)]
        centers = select_central_frames(trace, omega=5)
        assert len(centers) == 2
        assert centers[0] < 2 <= centers[1]


class TestFovRasterizer:
    def test_single_member_exact(self):
        trace = trace_with_homs([translation(-50.0)])
        cand = build_candidate(trace, 0, omega=1)
        assert cand.members == [0]
        assert cand.fov_pixels == 10_000.0

    def test_two_squares_union_within_two_percent(self):
        # second member lands 50 px to the right: union area 15000
        trace = trace_with_homs([translation(-50.0)], width=100, height=100)
        cand = build_candidate(trace, 0, omega=2)
        assert cand.members == [0, 1]
        assert cand.fov_pixels == pytest.approx(15_000.0, rel=0.02)

    def test_member_inside_center_is_subset(self):
        H = np.diag([0.5, 0.5, 1.0])  # frame-0 content shrinks into frame 1
        trace = trace_with_homs([H])
        cand = build_candidate(trace, 1, omega=2)
        # member 0 warps into a quarter of frame 1: union equals the center frame
        assert cand.fov_pixels == 10_000.0

    def test_union_bounds(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            quads = []
            areas = []
            for _ in range(3):
                x0, y0 = rng.uniform(0, 60, 2)
                w, h = rng.uniform(20, 60, 2)
                quads.append(np.array([[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]]))
                areas.append(w * h)
            ref = quads[0]
            ref_area = areas[0]
            got = union_area(quads, ref, ref_area)
            assert got <= sum(areas) * 1.03
            assert got >= max(areas) * 0.97

    def test_member_excluded_when_tracking_lost(self):
        trace = trace_with_homs([translation(-10.0), None, translation(-10.0)])
        cand = build_candidate(trace, 0, omega=4, members=[0, 1, 2, 3])
        assert cand.members == [0, 1]  # 2 and 3 are beyond the broken link

    def test_members_before_break_excluded(self):
        trace = trace_with_homs([None, translation(-10.0)])
        cand = build_candidate(trace, 1, omega=3, members=[0, 1, 2])
        assert cand.members == [1, 2]  # 0 sits beyond the broken link

    def test_fov_at_least_frame_area_odd_dims(self):
        trace = trace_with_homs([translation(-3.0)], width=101, height=67)
        cand = build_candidate(trace, 0, omega=2)
        assert cand.fov_pixels >= 101 * 67


class TestCandidateSampling:
    def make_candidates(self, trace, centers, fovs):
        out = []
        for k, (c, f) in enumerate(zip(centers, fovs)):
            cand = PanoramaCandidate(ident=k, video_id=trace.video_id, center=c,
                                     members=[c], warps={c: np.eye(3)})
            cand.fov_pixels = f
            out.append(cand)
        return out

    def test_identical_fov_matches_plain_frame_sampling_over_centers(self):
        trace = make_random_trace(n=40, tau=39, seed=8)
        centers = [2, 9, 17, 25, 33, 39]
        w = CostWeights(alpha=100, beta=10, gamma=5, k_flow=8.0)
        cands = self.make_candidates(trace, centers, [5000.0] * 6)
        selected, total = solve_panorama_sampling(cands, trace, w, tau=20,
                                                  d_start=10, d_end=10)

        def weight(p, q):
            s, v = motion_terms(trace, centers[p], centers[q], w)
            return (w.alpha * s + w.beta * v)  # fov deficit is 0 everywhere

        succ = {p: [q for q in range(p + 1, 6) if centers[q] - centers[p] <= 20]
                for p in range(6)}
        cost, path = best_candidate_path(6, weight, succ,
                                         [p for p in range(6) if centers[p] < 10],
                                         {p for p in range(6) if centers[p] >= 30})
        assert selected == path
        assert total == pytest.approx(cost)

    def test_wider_fov_chain_wins(self):
        trace = make_random_trace(n=40, tau=39, seed=8)
        # two interleaved chains with identical motion costs, one twice the fov
        centers = [2, 3, 12, 13, 22, 23, 32, 33]
        fovs = [1000.0, 2000.0] * 4
        w = CostWeights(alpha=0, beta=0, gamma=1.0, k_flow=1.0)
        cands = self.make_candidates(trace, centers, fovs)
        selected, total = solve_panorama_sampling(cands, trace, w, tau=12,
                                                  d_start=4, d_end=9)
        # the field-of-view term charges the source panorama of each edge, so
        # every non-terminal selection must come from the wide chain
        assert len(selected) >= 2
        assert all(fovs[s] == 2000.0 for s in selected[:-1])
        assert total == 0.0

    @pytest.mark.parametrize("seed", range(4))
    def test_random_instance_matches_enumeration(self, seed):
        rng = np.random.default_rng(400 + seed)
        trace = make_random_trace(n=60, tau=59, seed=seed)
        centers = sorted(rng.choice(np.arange(1, 59), size=10, replace=False).tolist())
        fovs = rng.uniform(1000, 9000, 10).tolist()
        w = CostWeights(alpha=500, beta=20, gamma=100, k_flow=6.0)
        cands = self.make_candidates(trace, centers, fovs)
        selected, total = solve_panorama_sampling(cands, trace, w, tau=25,
                                                  d_start=15, d_end=15)
        fmax = max(fovs)

        def weight(p, q):
            s, v = motion_terms(trace, centers[p], centers[q], w)
            return candidate_edge_weight(s, v, fovs[p], fmax, w, FOV_DEFICIT)

        succ = {p: [q for q in range(p + 1, 10) if 0 < centers[q] - centers[p] <= 25]
                for p in range(10)}
        sources = [p for p in range(10) if centers[p] < 15] or [0]
        sinks = set(p for p in range(10) if centers[p] >= 60 - 15) or {9}
        cost, path = best_candidate_path(10, weight, succ, sources, sinks)
        assert selected == path
        assert total == cost


class TestRigidAlignment:
    def test_pure_translation(self):
        r = align_rigid(translation(10.0, 5.0), 100, 100)
        assert r.theta == pytest.approx(0.0, abs=1e-12)
        assert (r.tx, r.ty) == pytest.approx((10.0, 5.0))
        assert not r.reset

    def test_rotation_about_center(self):
        th = math.radians(5.0)
        c, s = math.cos(th), math.sin(th)
        cx = cy = 50.0
        H = np.array(
            [[c, -s, cx - c * cx + s * cy], [s, c, cy - s * cx - c * cy], [0, 0, 1.0]]
        )
        r = align_rigid(H, 100, 100)
        assert r.theta == pytest.approx(th, abs=1e-9)
        assert abs(r.tx) < 1e-6 and abs(r.ty) < 1e-6

    def test_projective_perturbation_recovers_rotation(self):
        th = math.radians(3.0)
        c, s = math.cos(th), math.sin(th)
        cx = cy = 50.0
        H = np.array(
            [[c, -s, cx - c * cx + s * cy + 2.0],
             [s, c, cy - s * cx - c * cy - 1.0],
             [1e-5, -8e-6, 1.0]]
        )
        r = align_rigid(H, 100, 100)
        assert abs(math.degrees(r.theta - th)) < 0.5
        src = warp_corners(np.eye(3), 100, 100)
        dst = warp_corners(H, 100, 100)
        M = r.matrix(100, 100)
        fit = (M @ np.c_[src, np.ones(4)].T).T[:, :2]
        residual = np.linalg.norm(fit - dst, axis=1).max()
        displacement = np.linalg.norm(dst - src, axis=1).max()
        assert residual < displacement

    def test_untracked_resets(self):
        r = align_rigid(None, 100, 100, tracked=False)
        assert r.reset
        assert np.allclose(r.matrix(100, 100), np.eye(3))

    def test_rotation_part_orthonormal(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            H = np.eye(3)
            H[:2, :2] += rng.uniform(-0.2, 0.2, (2, 2))
            H[:2, 2] = rng.uniform(-30, 30, 2)
            r = align_rigid(H, 64, 48)
            R = r.matrix(64, 48)[:2, :2]
            assert np.allclose(R.T @ R, np.eye(2), atol=1e-12)


class TestCropPath:
    def full_mask(self, shape=(60, 80)):
        return np.ones(shape, dtype=bool)

    def test_lambda_zero_reproduces_mass_centers(self):
        m = np.array([[10.0, 20.0], [30.0, 15.0], [12.0, 40.0]])
        cr = solve_crop_centers(m, 0.0)
        assert (cr == m).all()

    def test_constant_mass_centers_are_fixed_point(self):
        m = np.tile([[33.0, 21.0]], (7, 1))
        cr = solve_crop_centers(m, 15.0)
        assert cr == pytest.approx(m, abs=1e-12)

    def test_matches_converged_jacobi_iteration(self):
        m = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 0.0]])
        lam = 1.0
        cr = solve_crop_centers(m, lam)
        x = m.copy()
        for _ in range(10_000):
            nxt = x.copy()
            nxt[0] = (lam * x[1] + m[0]) / (lam + 1)
            nxt[-1] = (lam * x[-2] + m[-1]) / (lam + 1)
            for i in range(1, len(m) - 1):
                nxt[i] = (lam * (x[i - 1] + x[i + 1]) + m[i]) / (2 * lam + 1)
            x = nxt
        assert cr == pytest.approx(x, abs=1e-9)

    def test_interior_fixed_point_residual(self):
        rng = np.random.default_rng(9)
        m = rng.uniform(0, 50, size=(20, 2))
        for lam in (0.1, 1.0, 15.0):
            cr = solve_crop_centers(m, lam)
            for i in range(1, 19):
                expect = (lam * (cr[i - 1] + cr[i + 1]) + m[i]) / (2 * lam + 1)
                assert np.abs(cr[i] - expect).max() < 1e-9

    def test_single_coordinate_perturbation_increases_energy(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            m = rng.uniform(0, 30, size=(12, 2))
            for lam in (0.1, 1.0, 15.0):
                cr = solve_crop_centers(m, lam)
                e0 = crop_energy(cr[:, 0], m[:, 0], lam) + crop_energy(cr[:, 1], m[:, 1], lam)
                for i in (0, 5, 11):
                    for d in (1e-3, -1e-3):
                        p = cr.copy()
                        p[i, 0] += d
                        e = crop_energy(p[:, 0], m[:, 0], lam) + crop_energy(p[:, 1], m[:, 1], lam)
                        assert e > e0

    def test_larger_lambda_never_lengthens_path(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            m = rng.uniform(0, 40, size=(15, 2))
            lam = 0.5
            prev = None
            for _ in range(6):
                cr = solve_crop_centers(m, lam)
                length = float(np.linalg.norm(np.diff(cr, axis=0), axis=1).sum())
                if prev is not None:
                    assert length <= prev + 1e-9
                prev = length
                lam *= 2

    def test_crop_size_and_centers(self):
        masks = [self.full_mask() for _ in range(3)]
        m = np.array([[40.0, 30.0], [41.0, 30.0], [42.0, 30.0]])
        cr, (w, h) = solve_crop_path(m, 1.0, masks, aspect=4 / 3)
        assert w / h == pytest.approx(4 / 3, rel=0.1)
        assert w > 10 and h > 10

    def test_empty_coverage_raises(self):
        mask = np.zeros((40, 40), dtype=bool)
        mask[:2, :2] = True
        with pytest.raises(EmptyCoverage):
            solve_crop_path(np.array([[30.0, 30.0]]), 0.0, [mask], aspect=1.0)


class TestPipeline:
    def test_plan_panoramas_end_to_end(self):
        trace = make_oscillating_trace(n=120, period=10, tau=30)
        plan = plan_panoramas(trace, omega=10, weights=CostWeights(
            alpha=1e7, beta=5e6, gamma=1.0, k_flow=10.0), lam=15.0,
            tau=30, d_start=15, d_end=15)
        assert plan.selected
        assert len(plan.alignment) == len(plan.selected)
        assert plan.alignment[0].reset
        assert len(plan.crop_centers) == len(plan.selected)
        w, h = plan.min_crop()
        assert w > 0 and h > 0
        d = plan.to_dict()
        assert set(d) >= {"panoramas", "selected", "alignment", "crop", "crop_w", "crop_h"}

    def test_plan_survives_tracking_resets(self):
        trace = make_oscillating_trace(n=60, period=10, tau=20)
        # break tracking in the middle
        broken = dict(trace.homographies)
        broken[(29, 30)] = HomographyLink(29, 30, np.eye(3), False)
        trace.homographies = broken
        plan = plan_panoramas(trace, omega=10, weights=CostWeights(
            alpha=100.0, beta=10.0, gamma=1.0, k_flow=10.0), lam=5.0,
            tau=25, d_start=12, d_end=12)
        resets = [a.reset for a in plan.alignment]
        assert resets[0]
        assert len(plan.segments) == sum(resets)
        assert len(plan.crop_sizes) == len(plan.segments)
