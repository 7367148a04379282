"""Shared fixtures and independent reference oracles for tests.

The oracles here deliberately avoid the implementation paths they check:
finite differences for the 1-D conduction profile, interpolation-based
quadrature for the triangle conductance, and a numerically integrated
cross-section equilibrium for the two-layer actuator.
"""

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def fd_two_panel_profile(L1, L2, L, W, t_c, t_p, k, q_total, n_cells=20000):
    """Cell-centered finite-difference solve of the two-panel 1-D problem.

    Returns (x_centers, T) with panel far ends held at zero.
    """
    x_left = -(W / 2 + L1)
    x_right = W / 2 + L2
    total = x_right - x_left
    n1 = max(int(round(n_cells * L1 / total)), 10)
    nc = max(int(round(n_cells * W / total)), 10)
    n2 = max(int(round(n_cells * L2 / total)), 10)

    edges = np.concatenate([
        np.linspace(x_left, -W / 2, n1 + 1),
        np.linspace(-W / 2, W / 2, nc + 1)[1:],
        np.linspace(W / 2, x_right, n2 + 1)[1:],
    ])
    centers = 0.5 * (edges[:-1] + edges[1:])
    dx = np.diff(edges)
    n = len(centers)

    def area(x):
        return L * t_c if -W / 2 < x < W / 2 else L * t_p

    A = np.array([area(x) for x in centers])
    src = np.zeros(n)
    in_crease = (centers > -W / 2) & (centers < W / 2)
    src[in_crease] = q_total / W * dx[in_crease]

    rows, cols, vals = [], [], []
    rhs = src.copy()

    def add(i, j, g):
        rows.extend([i, i])
        cols.extend([i, j])
        vals.extend([g, -g])

    for i in range(n - 1):
        g = 1.0 / (dx[i] / (2 * k * A[i]) + dx[i + 1] / (2 * k * A[i + 1]))
        add(i, i + 1, g)
        add(i + 1, i, g)
    # Dirichlet ends via half-cell conductance to T = 0
    for i, gb in ((0, 2 * k * A[0] / dx[0]), (n - 1, 2 * k * A[-1] / dx[-1])):
        rows.append(i)
        cols.append(i)
        vals.append(gb)

    K = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    T = spla.spsolve(K.tocsc(), rhs)
    return centers, T


def fd_crease_summary(L1, L2, L, W, t_c, t_p, k, q_total, n_cells=20000):
    """(T at x=0, peak T, mean crease T) from the FD profile."""
    x, T = fd_two_panel_profile(L1, L2, L, W, t_c, t_p, k, q_total, n_cells)
    T0 = float(np.interp(0.0, x, T))
    in_crease = (x > -W / 2) & (x < W / 2)
    return T0, float(T.max()), float(T[in_crease].mean())


def t3_quadrature_oracle(points, k_mat, thickness):
    """Triangle conductance via interpolated shape-function gradients.

    Builds each linear shape function by solving the interpolation system,
    then integrates k t grad Ni . grad Nj with one-point quadrature (exact
    for constant gradients).
    """
    p = np.asarray(points, dtype=float)
    if p.shape[1] == 3:
        # map to in-plane 2-D coordinates
        e1 = p[1] - p[0]
        e1 = e1 / np.linalg.norm(e1)
        w = p[2] - p[0]
        e2 = w - np.dot(w, e1) * e1
        e2 = e2 / np.linalg.norm(e2)
        p = np.array([[np.dot(q - p[0], e1), np.dot(q - p[0], e2)] for q in p])
    V = np.column_stack([np.ones(3), p[:, 0], p[:, 1]])
    grads = []
    for i in range(3):
        rhs = np.zeros(3)
        rhs[i] = 1.0
        coef = np.linalg.solve(V, rhs)
        grads.append(coef[1:])
    area = 0.5 * abs(np.linalg.det(np.array([p[1] - p[0], p[2] - p[0]])))
    K = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            K[i, j] = k_mat * thickness * area * float(np.dot(grads[i], grads[j]))
    return K


def bimorph_equilibrium_oracle(t1, t2, E1, E2, alpha1, alpha2, dT, n_quad=4000):
    """Curvature of a free two-layer strip from force and moment balance.

    Plane sections: strain(y) = e0 + c * y with y from the bottom face.
    Zero axial force and zero moment determine (e0, c) from numerically
    integrated layer stresses (midpoint quadrature per layer, so the
    material interface never straddles a cell). Returned with the
    convention that bending toward the top layer is positive.
    """
    ys, Es, alphas, ws = [], [], [], []
    for (y0, t, E, alpha) in ((0.0, t1, E1, alpha1), (t1, t2, E2, alpha2)):
        y = y0 + (np.arange(n_quad) + 0.5) * t / n_quad
        ys.append(y)
        Es.append(np.full(n_quad, E))
        alphas.append(np.full(n_quad, alpha))
        ws.append(np.full(n_quad, t / n_quad))
    y = np.concatenate(ys)
    E = np.concatenate(Es)
    alpha = np.concatenate(alphas)
    w = np.concatenate(ws)
    # unknowns (e0, c): integrate E*(e0 + c y - alpha dT) * {1, y} dy = 0
    A = np.array([[np.sum(E * w), np.sum(E * y * w)],
                  [np.sum(E * y * w), np.sum(E * y * y * w)]])
    b = np.array([np.sum(E * alpha * w) * dT, np.sum(E * alpha * y * w) * dT])
    e0, c = np.linalg.solve(A, b)
    # c > 0 means strain grows upward: bottom shorter, bends toward bottom;
    # flip so bending toward the top layer (layer 2) is positive
    return -float(c)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
