"""Mesh refinement, closure, overlay and their structural guarantees."""

import numpy as np
import pytest

from abem import (
    Geometry,
    dump_mesh,
    is_refinement_of,
    make_initial_mesh,
    mesh_stats,
    overlay,
    refine,
    slit_geometry,
    square_geometry,
    uniform_refine,
)


# ----------------------------------------------------------------------
# reference implementation of refine-with-closure (interval fixpoint)
# ----------------------------------------------------------------------
def oracle_refine(intervals, marked_positions, closed=False):
    """Brute-force bisection with closure on (t0, t1, gen) triples.

    Bisect the marked intervals, then repeatedly bisect any interval whose
    generation is two or more below a touching neighbor, until stable.
    Completely independent of the Mesh data structure.
    """
    elems = [list(e) for e in intervals]
    for k in sorted(marked_positions, reverse=True):
        t0, t1, g = elems[k]
        mid = t0 + 0.5 * (t1 - t0)
        elems[k : k + 1] = [[t0, mid, g + 1], [mid, t1, g + 1]]
    changed = True
    while changed:
        changed = False
        n = len(elems)
        pairs = [(k, k + 1) for k in range(n - 1)]
        if closed and n > 1:
            pairs.append((n - 1, 0))
        for a, b in pairs:
            ga, gb = elems[a][2], elems[b][2]
            if abs(ga - gb) > 1:
                k = a if ga < gb else b
                t0, t1, g = elems[k]
                mid = t0 + 0.5 * (t1 - t0)
                elems[k : k + 1] = [[t0, mid, g + 1], [mid, t1, g + 1]]
                changed = True
                break
    return elems


def random_mesh(geometry, n0, rng, rounds=4, frac=0.4):
    mesh = make_initial_mesh(geometry, n0)
    for _ in range(rounds):
        ids = mesh.element_ids()
        take = rng.random(len(ids)) < frac
        marked = {eid for eid, t in zip(ids, take) if t}
        mesh = refine(mesh, marked)
    return mesh


# ----------------------------------------------------------------------
# geometry
# ----------------------------------------------------------------------
class TestGeometry:
    def test_rejects_large_diameter(self):
        with pytest.raises(ValueError, match="diameter"):
            Geometry(np.array([[0.0, 0.0], [1.5, 0.0]]), closed=False)

    def test_auto_scaling_records_factor(self):
        g = Geometry.scaled_to_unit_diameter(
            np.array([[0.0, 0.0], [2.0, 0.0]]), closed=False
        )
        assert g.scale_factor == pytest.approx(0.4)
        assert g.diameter == pytest.approx(0.8)

    def test_rejects_repeated_vertices(self):
        with pytest.raises(ValueError, match="distinct"):
            Geometry(np.array([[0.0, 0.0], [0.0, 0.0], [0.1, 0.1]]), closed=True)

    def test_square_arclength_map(self):
        g = square_geometry(0.2)
        assert g.total_length == pytest.approx(0.8)
        assert np.allclose(g.points_at(np.array([0.3])), [[0.2, 0.1]])

    def test_closed_accepts_repeated_last_vertex(self):
        g = Geometry(
            np.array([[0.0, 0.0], [0.2, 0.0], [0.2, 0.2], [0.0, 0.0]]), closed=True
        )
        assert g.n_edges == 3


# ----------------------------------------------------------------------
# initial mesh
# ----------------------------------------------------------------------
class TestInitialMesh:
    def test_slit_two_elements(self):
        mesh = make_initial_mesh(slit_geometry(0.8), 2)
        assert mesh.n_elements == 2
        assert np.allclose(mesh.lengths, 0.4)

    def test_square_one_per_side(self):
        mesh = make_initial_mesh(square_geometry(0.2), 4)
        assert mesh.n_elements == 4
        assert np.allclose(mesh.lengths, 0.2)
        # element endpoints include all geometry vertices
        assert set(np.round(mesh.t0, 12)) >= {0.0, 0.2, 0.4, 0.6}

    def test_n0_zero_rejected(self):
        with pytest.raises(ValueError):
            make_initial_mesh(slit_geometry(), 0)

    def test_n0_below_edge_count_rejected(self):
        with pytest.raises(ValueError, match="vertex"):
            make_initial_mesh(square_geometry(), 3)

    def test_proportional_distribution(self):
        g = Geometry(np.array([[0.0, 0.0], [0.6, 0.0], [0.6, 0.2]]), closed=False)
        mesh = make_initial_mesh(g, 4)
        assert mesh.n_elements == 4
        # 0.6 edge gets 3 elements, 0.2 edge gets 1
        assert np.allclose(sorted(mesh.lengths), [0.2, 0.2, 0.2, 0.2])


# ----------------------------------------------------------------------
# refine
# ----------------------------------------------------------------------
class TestRefine:
    def test_mark_all_bisects_each_once(self):
        mesh = make_initial_mesh(slit_geometry(), 2)
        fine = refine(mesh, mesh.id_set())
        assert fine.n_elements == 4
        assert np.allclose(fine.lengths, 0.2)
        assert all(g == 1 for g in fine.gen)

    def test_empty_marking_is_noop(self):
        mesh = make_initial_mesh(slit_geometry(), 2)
        assert refine(mesh, set()) is mesh

    def test_unknown_id_rejected(self):
        mesh = make_initial_mesh(slit_geometry(), 2)
        with pytest.raises(ValueError, match="not in mesh"):
            refine(mesh, {999})

    def test_marked_elements_never_survive(self):
        rng = np.random.default_rng(0)
        mesh = random_mesh(slit_geometry(), 2, rng)
        ids = mesh.element_ids()
        marked = set(rng.choice(ids, size=3, replace=False).tolist())
        fine = refine(mesh, marked)
        assert not (marked & fine.id_set())

    def test_repeated_leftmost_marking_matches_oracle(self):
        # Marking the leftmost descendant of one element repeatedly must
        # drag the untouched neighbor along via closure.
        mesh = make_initial_mesh(slit_geometry(0.8), 2)
        for _ in range(3):
            # leftmost descendant of the right initial element
            k = int(np.searchsorted(mesh.t0, 0.4))
            mesh = refine(mesh, {mesh.element_ids()[k]})
        oracle = [[0.0, 0.4, 0], [0.4, 0.8, 0]]
        for _ in range(3):
            k = next(i for i, e in enumerate(oracle) if e[0] >= 0.4 - 1e-12)
            oracle = oracle_refine(oracle, [k])
        assert mesh.n_elements == len(oracle)
        assert np.allclose(mesh.t0, [e[0] for e in oracle])
        assert mesh.gen.tolist() == [e[2] for e in oracle]

    @pytest.mark.parametrize("geom,n0", [("slit", 2), ("square", 4)])
    def test_random_markings_match_oracle(self, geom, n0):
        g = slit_geometry() if geom == "slit" else square_geometry()
        rng = np.random.default_rng(7)
        mesh = make_initial_mesh(g, n0)
        for _ in range(6):
            ids = mesh.element_ids()
            k = rng.integers(0, len(ids), size=max(1, len(ids) // 3))
            marked_pos = sorted(set(int(x) for x in k))
            intervals = [
                [float(a), float(b), int(gg)]
                for a, b, gg in zip(mesh.t0, mesh.t1, mesh.gen)
            ]
            expect = oracle_refine(intervals, marked_pos, closed=g.closed)
            mesh = refine(mesh, {ids[i] for i in marked_pos})
            assert mesh.n_elements == len(expect)
            assert np.allclose(mesh.t0, [e[0] for e in expect])
            assert mesh.gen.tolist() == [e[2] for e in expect]

    def test_parent_is_union_of_two_children(self):
        # one-level refinement: every refined parent splits into exactly 2
        # sons whose intervals tile the parent
        rng = np.random.default_rng(3)
        for _ in range(20):
            mesh = random_mesh(slit_geometry(), 2, rng, rounds=3)
            ids = mesh.element_ids()
            marked = {ids[int(rng.integers(0, len(ids)))]}
            fine = refine(mesh, marked)
            fine_ids = fine.id_set()
            coarse_ids = mesh.id_set()
            spans = {
                eid: (float(a), float(b))
                for eid, a, b in zip(mesh.element_ids(), mesh.t0, mesh.t1)
            }
            for eid in coarse_ids - fine_ids:  # refined elements
                kids = [
                    k
                    for k in range(fine.n_elements)
                    if fine.gen[k] > 0 and fine.ancestor_id(k, 1) == eid
                ]
                assert len(kids) == 2
                a, b = spans[eid]
                assert float(fine.t0[kids[0]]) == a
                assert float(fine.t1[kids[1]]) == b
                assert float(fine.t1[kids[0]]) == float(fine.t0[kids[1]])


class TestUniformRefine:
    def test_doubles_count(self):
        mesh = make_initial_mesh(slit_geometry(), 2)
        assert uniform_refine(mesh).n_elements == 4

    def test_generation_increments_everywhere(self):
        rng = np.random.default_rng(5)
        mesh = random_mesh(square_geometry(), 4, rng)
        fine = uniform_refine(mesh)
        assert fine.n_elements == 2 * mesh.n_elements
        parent_gen = np.repeat(mesh.gen, 2)
        assert np.array_equal(fine.gen, parent_gen + 1)

    def test_equals_refine_with_all_marked(self):
        rng = np.random.default_rng(6)
        mesh = random_mesh(slit_geometry(), 2, rng)
        a = uniform_refine(mesh)
        b = refine(mesh, mesh.id_set())
        assert a.element_ids() == b.element_ids()


# ----------------------------------------------------------------------
# overlay
# ----------------------------------------------------------------------
class TestOverlay:
    def test_identity(self):
        rng = np.random.default_rng(11)
        mesh = random_mesh(slit_geometry(), 2, rng)
        assert overlay(mesh, mesh).element_ids() == mesh.element_ids()

    def test_refinement_absorbs(self):
        mesh = make_initial_mesh(slit_geometry(), 2)
        fine = uniform_refine(mesh)
        assert overlay(mesh, fine).element_ids() == fine.element_ids()
        assert overlay(fine, mesh).element_ids() == fine.element_ids()

    def test_different_families_rejected(self):
        a = make_initial_mesh(slit_geometry(), 2)
        b = make_initial_mesh(slit_geometry(), 3)
        with pytest.raises(ValueError, match="same initial mesh"):
            overlay(a, b)

    @pytest.mark.parametrize("geom", ["slit", "square"])
    def test_cardinality_bound_on_random_pairs(self, geom):
        g = slit_geometry() if geom == "slit" else square_geometry()
        n0 = 2 if geom == "slit" else 4
        rng = np.random.default_rng(13)
        for _ in range(100):
            a = random_mesh(g, n0, rng, rounds=int(rng.integers(1, 5)))
            b = random_mesh(g, n0, rng, rounds=int(rng.integers(1, 5)))
            ov = overlay(a, b)
            assert ov.n_elements <= a.n_elements + b.n_elements - n0
            assert is_refinement_of(ov, a)
            assert is_refinement_of(ov, b)


# ----------------------------------------------------------------------
# stats and growth bounds
# ----------------------------------------------------------------------
class TestStatsAndGrowth:
    def test_uniform_ratio_is_one(self):
        mesh = make_initial_mesh(slit_geometry(), 4)
        assert mesh_stats(mesh).mesh_ratio == pytest.approx(1.0)

    def test_adjacent_ratio_two(self):
        mesh = make_initial_mesh(slit_geometry(0.6), 2)
        mesh = refine(mesh, {mesh.element_ids()[0]})
        assert mesh_stats(mesh).mesh_ratio == pytest.approx(2.0)

    @pytest.mark.parametrize("geom", ["slit", "square"])
    def test_mesh_ratio_bounded_by_twice_initial(self, geom):
        g = slit_geometry() if geom == "slit" else square_geometry()
        n0 = 3 if geom == "slit" else 4
        rng = np.random.default_rng(17)
        gamma0 = mesh_stats(make_initial_mesh(g, n0)).mesh_ratio
        for _ in range(25):
            mesh = random_mesh(g, n0, rng, rounds=int(rng.integers(1, 6)))
            assert mesh_stats(mesh).mesh_ratio <= 2.0 * gamma0 + 1e-12

    def test_cumulative_growth_bound(self):
        # total growth stays within a fixed multiple of the marked count
        rng = np.random.default_rng(19)
        for _ in range(20):
            mesh = make_initial_mesh(slit_geometry(), 2)
            n0 = mesh.n_elements
            total_marked = 0
            for _ in range(20):
                ids = mesh.element_ids()
                size = int(rng.integers(1, max(2, len(ids) // 2)))
                marked = set(rng.choice(ids, size=size, replace=False).tolist())
                total_marked += len(marked)
                mesh = refine(mesh, marked)
                assert mesh.n_elements - n0 <= 8 * total_marked

    def test_generation_gap_invariant_holds_everywhere(self):
        rng = np.random.default_rng(23)
        mesh = random_mesh(square_geometry(), 4, rng, rounds=6)
        gaps = np.abs(np.diff(mesh.gen))
        assert gaps.max(initial=0) <= 1
        assert abs(int(mesh.gen[-1]) - int(mesh.gen[0])) <= 1  # closed wrap

    def test_ancestry_map_total(self):
        rng = np.random.default_rng(29)
        coarse = random_mesh(slit_geometry(), 2, rng, rounds=2)
        fine = random_mesh_from(coarse, rng, rounds=3)
        assert is_refinement_of(fine, coarse)


def random_mesh_from(mesh, rng, rounds=3, frac=0.4):
    for _ in range(rounds):
        ids = mesh.element_ids()
        take = rng.random(len(ids)) < frac
        marked = {eid for eid, t in zip(ids, take) if t}
        mesh = refine(mesh, marked)
    return mesh


class TestDump:
    def test_format_and_roundtrip_fields(self):
        mesh = refine(
            make_initial_mesh(slit_geometry(), 2),
            {make_initial_mesh(slit_geometry(), 2).element_ids()[1]},
        )
        lines = dump_mesh(mesh).strip().splitlines()
        assert len(lines) == mesh.n_elements
        for line, eid, pid, g, a, b in zip(
            lines,
            mesh.element_ids(),
            mesh.parent_ids(),
            mesh.gen,
            mesh.t0,
            mesh.t1,
        ):
            tok = line.split()
            assert int(tok[0]) == eid
            assert int(tok[1]) == pid
            assert int(tok[2]) == int(g)
            assert float(tok[3]) == float(a)
            assert float(tok[4]) == float(b)
