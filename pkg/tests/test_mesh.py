import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from idpdg.equations import LinearAdvection
from idpdg.mesh import (
    GeometryError,
    Mesh,
    contravariant_velocity,
    face_nodes,
    high_order_identity_residual,
    low_order_identity_residual,
    reference_points,
    subcell_faces,
)
from conftest import make_disc


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh(3, (2, 2, 2), (0,) * 3, (1,) * 3, (True,) * 3)
    with pytest.raises(ValueError):
        Mesh(2, (2,), (0, 0), (1, 1), (True, True))
    with pytest.raises(ValueError):
        Mesh(1, (0,), (0,), (1,), (True,))
    with pytest.raises(ValueError):
        Mesh(1, (2,), (0,), (1,), (True,), mapping="twist")


def test_element_ordering_x_fastest():
    m = Mesh(2, (3, 2), (0, 0), (1, 1), (True, True))
    E = m.element_multi_index()
    assert E[:4].tolist() == [[0, 0], [1, 0], [2, 0], [0, 1]]
    assert m.element_index((2, 1)) == 5


def test_reference_points_and_face_nodes():
    pts = reference_points(np.array([0.0, 1.0]), 2)
    assert pts.tolist() == [[0, 0], [1, 0], [0, 1], [1, 1]]
    assert face_nodes(3, 2, 0, 1).tolist() == [2, 5, 8]
    assert face_nodes(3, 2, 1, 0).tolist() == [0, 1, 2]


def test_affine_geometry():
    D = make_disc(2, (2, 4), 2, lower=(0.0, -1.0), upper=(2.0, 1.0))
    # element is 1 x 0.5: detJ = 0.5, GJ = diag(0.5, 1)
    assert np.allclose(D.geom.detJ, 0.5)
    assert np.allclose(D.geom.GJ[:, 0, 0], 0.5) and np.allclose(D.geom.GJ[:, 1, 1], 1.0)
    assert np.isclose(D.mass.sum(), 4.0)
    assert np.allclose(D.geom.correction, 0.0, atol=1e-14)


def test_nonpositive_jacobian_rejected():
    with pytest.raises(GeometryError):
        make_disc(2, 4, 3, mapping="sine", amplitude=0.5)


@given(st.integers(1, 6), st.floats(0.0, 0.1))  # 3x3 meshes fold above about 0.11
@settings(max_examples=20, deadline=None)
def test_metric_identities_on_curved_mesh(p, a):
    D = make_disc(2, 3, p, mapping="sine", amplitude=a)
    strong, weak = high_order_identity_residual(D.geom, D.ops)
    assert strong.max() < 1e-11 and weak.max() < 1e-11
    assert low_order_identity_residual(D.geom, D.ops).max() < 1e-12
    if p >= 2:
        # the warp fixes the box, so the collocated mass still sums to its area
        assert np.isclose(D.mass.sum(), 1.0, rtol=0, atol=1e-10)


def test_interior_face_normals_cancel():
    D = make_disc(2, 3, 3, mapping="sine", amplitude=0.1)
    for (axis, side), wn in D.geom.face_wn.items():
        if side == 1:
            other = D.geom.face_wn[(axis, 0)]
            # element (ex, ey)'s right face against its neighbour's left face
            nx = 3
            E = D.mesh.element_multi_index()
            for e, (ex, ey) in enumerate(E):
                nb = ((ex + 1) % nx + ey * nx) if axis == 0 else (ex + ((ey + 1) % nx) * nx)
                assert np.allclose(wn[e], -other[nb], atol=1e-14)


def metric_correction_sizes(levels=(4, 8, 16), p=3, a=0.1):
    return np.array([np.abs(make_disc(2, n, p, mapping="sine", amplitude=a).geom.correction).max() for n in levels])


def test_metric_correction_is_order_h():
    sizes = metric_correction_sizes()
    h = 1.0 / np.array([4, 8, 16])
    slope = np.polyfit(np.log(h), np.log(sizes), 1)[0]
    assert slope >= 0.9


def test_contravariant_velocity_rejects_sources():
    D = make_disc(2, 2, 2)
    beta = np.stack([D.x[:, 0], np.zeros(D.N)], axis=1)  # divergence 1
    with pytest.raises(GeometryError):
        contravariant_velocity(D.geom, D.ops, beta)


def test_contravariant_velocity_satisfies_identity():
    D = make_disc(2, 3, 3, mapping="sine", amplitude=0.1)
    beta = np.stack([0.5 - D.x[:, 1], D.x[:, 0] - 0.5], axis=1)
    q = contravariant_velocity(D.geom, D.ops, beta)
    qe = q.reshape(D.nel, D.nloc, 2)
    lhs = sum(np.einsum("ji,ej->ei", D.ops.Dhat[k], qe[:, :, k]) for k in range(2))
    rhs = np.zeros((D.nel, D.nloc))
    be = beta.reshape(D.nel, D.nloc, 2)
    for (axis, side), wn in D.geom.face_wn.items():
        loc = face_nodes(4, 2, axis, side)
        np.add.at(rhs, (slice(None), loc), np.sum(wn * be[:, loc], axis=-1))
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_subcell_faces_membership():
    faces = subcell_faces(4, 1, 0)
    assert len(faces) == 3
    for m, (a, b, members) in enumerate(faces):
        assert b == a + 1 and list(members) == list(range(m + 1))


def test_sparsified_stencil_is_compact():
    D = make_disc(1, 2, 5)
    nb = D.conn.neighbors(2)
    assert sorted(nb) == [1, 3]
    dense = make_disc(1, 2, 5, sparsified=False)
    assert len(dense.conn.neighbors(2)) == 5


def test_volume_coefficients_row_sums():
    # sum_j c_ij over the closed element equals the boundary term, so the
    # full row (diag + off-diagonal + faces) vanishes on periodic meshes
    D = make_disc(2, 3, 3, mapping="sine", amplitude=0.08)
    for i in (0, 5, 17, 40):
        c = D.conn.diagonal_coefficient(i) + sum(D.conn.neighbors(i).values())
        assert np.allclose(c, 0.0, atol=1e-12)


def test_linear_advection_constant_velocity_model():
    m = LinearAdvection(2, [1.0, 0.5])
    assert m.velocity(None, 3).shape == (3, 2)
