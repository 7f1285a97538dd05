# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dynamics kernels. Layouts are documented in ``_layout.py``."""

import numpy as np

from libc.math cimport cos, sin, tan, fabs, sqrt, atan2, hypot, M_PI

from ..errors import GimbalLock

BACKEND = "cython"

cdef enum:
    NJ = 6
    HEADER = 23
    STRIDE = 29

cdef double PITCH_GUARD = 1e-6


cdef struct Chain:
    double R[NJ][9]      # joint frame i in parent, joint rotation included
    double p[NJ][3]
    double a[NJ][3]
    double m[NJ]
    double c[NJ][3]
    double Ic[NJ][9]
    double arm[NJ]


# ---------------------------------------------------------------- 3-vector / 3x3 helpers

cdef inline void cross(const double* a, const double* b, double* out) noexcept:
    cdef double x = a[1] * b[2] - a[2] * b[1]
    cdef double y = a[2] * b[0] - a[0] * b[2]
    cdef double z = a[0] * b[1] - a[1] * b[0]
    out[0] = x
    out[1] = y
    out[2] = z


cdef inline void mv(const double* A, const double* v, double* out) noexcept:
    cdef double x = A[0] * v[0] + A[1] * v[1] + A[2] * v[2]
    cdef double y = A[3] * v[0] + A[4] * v[1] + A[5] * v[2]
    cdef double z = A[6] * v[0] + A[7] * v[1] + A[8] * v[2]
    out[0] = x
    out[1] = y
    out[2] = z


cdef inline void mtv(const double* A, const double* v, double* out) noexcept:
    cdef double x = A[0] * v[0] + A[3] * v[1] + A[6] * v[2]
    cdef double y = A[1] * v[0] + A[4] * v[1] + A[7] * v[2]
    cdef double z = A[2] * v[0] + A[5] * v[1] + A[8] * v[2]
    out[0] = x
    out[1] = y
    out[2] = z


cdef inline void mm(const double* A, const double* B, double* out) noexcept:
    cdef int i, j
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = A[3 * i] * B[j] + A[3 * i + 1] * B[3 + j] + A[3 * i + 2] * B[6 + j]


cdef inline void mtm(const double* A, const double* B, double* out) noexcept:
    # A^T B
    cdef int i, j
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = A[i] * B[j] + A[3 + i] * B[3 + j] + A[6 + i] * B[6 + j]


cdef inline void axis_angle(const double* k, double q, double* R) noexcept:
    cdef double s = sin(q), c = cos(q), v = 1.0 - c
    R[0] = c + k[0] * k[0] * v
    R[1] = k[0] * k[1] * v - k[2] * s
    R[2] = k[0] * k[2] * v + k[1] * s
    R[3] = k[1] * k[0] * v + k[2] * s
    R[4] = c + k[1] * k[1] * v
    R[5] = k[1] * k[2] * v - k[0] * s
    R[6] = k[2] * k[0] * v - k[1] * s
    R[7] = k[2] * k[1] * v + k[0] * s
    R[8] = c + k[2] * k[2] * v


cdef inline void rpy(const double* phi, double* R) noexcept:
    cdef double ca = cos(phi[0]), sa = sin(phi[0])
    cdef double cb = cos(phi[1]), sb = sin(phi[1])
    cdef double cg = cos(phi[2]), sg = sin(phi[2])
    R[0] = cg * cb
    R[1] = cg * sb * sa - sg * ca
    R[2] = cg * sb * ca + sg * sa
    R[3] = sg * cb
    R[4] = sg * sb * sa + cg * ca
    R[5] = sg * sb * ca - cg * sa
    R[6] = -sb
    R[7] = cb * sa
    R[8] = cb * ca


# ---------------------------------------------------------------- spatial helpers ([v; w] ordering)

cdef inline void motion_to_child(const double* R, const double* p, const double* V, double* out) noexcept:
    cdef double t[3]
    cross(p, &V[3], t)
    t[0] = V[0] - t[0]
    t[1] = V[1] - t[1]
    t[2] = V[2] - t[2]
    mtv(R, t, out)
    mtv(R, &V[3], &out[3])


cdef inline void force_to_parent(const double* R, const double* p, const double* f, double* out) noexcept:
    cdef double t[3]
    mv(R, f, out)
    mv(R, &f[3], &out[3])
    cross(p, out, t)
    out[3] += t[0]
    out[4] += t[1]
    out[5] += t[2]


cdef inline void inertia_mul(double m, const double* c, const double* Ic, const double* V, double* out) noexcept:
    cdef double t[3]
    cross(c, &V[3], t)
    out[0] = m * (V[0] - t[0])
    out[1] = m * (V[1] - t[1])
    out[2] = m * (V[2] - t[2])
    mv(Ic, &V[3], &out[3])
    cross(c, out, t)
    out[3] += t[0]
    out[4] += t[1]
    out[5] += t[2]


cdef inline void crm(const double* V, const double* m, double* out) noexcept:
    cdef double t[3]
    cdef double u[3]
    cross(&V[3], m, t)
    cross(V, &m[3], u)
    cross(&V[3], &m[3], &out[3])
    out[0] = t[0] + u[0]
    out[1] = t[1] + u[1]
    out[2] = t[2] + u[2]


cdef inline void crf(const double* V, const double* f, double* out) noexcept:
    cdef double t[3]
    cdef double u[3]
    cross(&V[3], &f[3], t)
    cross(V, f, u)
    cross(&V[3], f, out)
    out[3] = t[0] + u[0]
    out[4] = t[1] + u[1]
    out[5] = t[2] + u[2]


# ---------------------------------------------------------------- chain setup

cdef void build_chain(const double* model, const double* q, Chain* ch) noexcept:
    cdef int i, k, b
    cdef double Rq[9]
    for i in range(NJ):
        b = HEADER + STRIDE * i
        for k in range(3):
            ch.a[i][k] = model[b + 12 + k]
            ch.p[i][k] = model[b + 9 + k]
            ch.c[i][k] = model[b + 16 + k]
        axis_angle(ch.a[i], q[i], Rq)
        mm(&model[b], Rq, ch.R[i])
        ch.m[i] = model[b + 15]
        for k in range(9):
            ch.Ic[i][k] = model[b + 19 + k]
        ch.arm[i] = model[b + 28]


cdef void rnea(const double* model, const Chain* ch, const double* R_gf, const double* xi,
               const double* xidot, bint gravity, double* tau) noexcept:
    cdef double V[NJ + 1][6]
    cdef double A[NJ + 1][6]
    cdef double F[NJ + 1][6]
    cdef double t[6]
    cdef double u[6]
    cdef double g_w[3]
    cdef double zero3[3]
    cdef int i, k
    zero3[0] = zero3[1] = zero3[2] = 0.0
    for k in range(6):
        V[0][k] = xi[k]
        A[0][k] = xidot[k]
    if gravity:
        g_w[0] = 0.0
        g_w[1] = 0.0
        g_w[2] = model[0]
        mtv(R_gf, g_w, t)
        A[0][0] += t[0]
        A[0][1] += t[1]
        A[0][2] += t[2]
    # vehicle: CoM at frame origin
    inertia_mul(model[1], zero3, &model[2], A[0], F[0])
    inertia_mul(model[1], zero3, &model[2], V[0], t)
    crf(V[0], t, u)
    for k in range(6):
        F[0][k] += u[k]
    for i in range(NJ):
        motion_to_child(ch.R[i], ch.p[i], V[i], V[i + 1])
        motion_to_child(ch.R[i], ch.p[i], A[i], A[i + 1])
        for k in range(3):
            V[i + 1][3 + k] += ch.a[i][k] * xi[6 + i]
            A[i + 1][3 + k] += ch.a[i][k] * xidot[6 + i]
        # crm(V) S qd
        for k in range(3):
            t[k] = 0.0
            t[3 + k] = ch.a[i][k] * xi[6 + i]
        crm(V[i + 1], t, u)
        for k in range(6):
            A[i + 1][k] += u[k]
        inertia_mul(ch.m[i], ch.c[i], ch.Ic[i], A[i + 1], F[i + 1])
        inertia_mul(ch.m[i], ch.c[i], ch.Ic[i], V[i + 1], t)
        crf(V[i + 1], t, u)
        for k in range(6):
            F[i + 1][k] += u[k]
    for i in range(NJ - 1, -1, -1):
        tau[6 + i] = (ch.a[i][0] * F[i + 1][3] + ch.a[i][1] * F[i + 1][4] + ch.a[i][2] * F[i + 1][5]
                      + ch.arm[i] * xidot[6 + i])
        force_to_parent(ch.R[i], ch.p[i], F[i + 1], t)
        for k in range(6):
            F[i][k] += t[k]
    for k in range(6):
        tau[k] = F[0][k]


cdef inline void body_to_parent_inertia(const double* R, const double* p, double m, const double* h,
                                        const double* J, double* h_out, double* J_out) noexcept:
    # rigid-body inertia (m, h = m c, J about origin) re-expressed in the parent frame
    cdef double Rh[3]
    cdef double T[9]
    cdef double RJ[9]
    cdef int i, j
    mv(R, h, Rh)
    for i in range(3):
        for j in range(3):
            RJ[3 * i + j] = R[3 * i] * J[j] + R[3 * i + 1] * J[3 + j] + R[3 * i + 2] * J[6 + j]
    for i in range(3):
        for j in range(3):
            T[3 * i + j] = RJ[3 * i] * R[3 * j] + RJ[3 * i + 1] * R[3 * j + 1] + RJ[3 * i + 2] * R[3 * j + 2]
    # -[p]x[Rh]x - [Rh]x[p]x - m[p]x[p]x  ==  (2 p.Rh + m p.p) I - p Rh^T - Rh p^T - m p p^T
    cdef double pr = p[0] * Rh[0] + p[1] * Rh[1] + p[2] * Rh[2]
    cdef double pp = p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
    for i in range(3):
        for j in range(3):
            J_out[3 * i + j] = T[3 * i + j] - p[i] * Rh[j] - Rh[i] * p[j] - m * p[i] * p[j]
        J_out[4 * i] += 2.0 * pr + m * pp
    for i in range(3):
        h_out[i] = Rh[i] + m * p[i]


cdef void crba(const double* model, const Chain* ch, double* M) noexcept:
    cdef double cm[NJ + 1]
    cdef double ch_h[NJ + 1][3]
    cdef double cJ[NJ + 1][9]
    cdef double h2[3]
    cdef double J2[9]
    cdef double F[6]
    cdef double G[6]
    cdef double t[3]
    cdef double cc
    cdef int i, j, k
    # per-link inertia about its own origin: J = Ic - m [c]x[c]x
    for i in range(NJ):
        cm[i + 1] = ch.m[i]
        cc = ch.c[i][0] ** 2 + ch.c[i][1] ** 2 + ch.c[i][2] ** 2
        for k in range(3):
            ch_h[i + 1][k] = ch.m[i] * ch.c[i][k]
        for j in range(3):
            for k in range(3):
                cJ[i + 1][3 * j + k] = ch.Ic[i][3 * j + k] - ch.m[i] * ch.c[i][j] * ch.c[i][k]
            cJ[i + 1][4 * j] += ch.m[i] * cc
    cm[0] = model[1]
    for k in range(3):
        ch_h[0][k] = 0.0
    for k in range(9):
        cJ[0][k] = model[2 + k]
    for i in range(NJ, 0, -1):
        body_to_parent_inertia(ch.R[i - 1], ch.p[i - 1], cm[i], ch_h[i], cJ[i], h2, J2)
        cm[i - 1] += cm[i]
        for k in range(3):
            ch_h[i - 1][k] += h2[k]
        for k in range(9):
            cJ[i - 1][k] += J2[k]
    for k in range(144):
        M[k] = 0.0
    # base block [[m I, -[h]x], [[h]x, J]]
    for k in range(3):
        M[12 * k + k] = cm[0]
    M[0 * 12 + 4] = ch_h[0][2]
    M[0 * 12 + 5] = -ch_h[0][1]
    M[1 * 12 + 3] = -ch_h[0][2]
    M[1 * 12 + 5] = ch_h[0][0]
    M[2 * 12 + 3] = ch_h[0][1]
    M[2 * 12 + 4] = -ch_h[0][0]
    for j in range(3):
        for k in range(3):
            M[12 * (3 + j) + k] = M[12 * k + 3 + j]
            M[12 * (3 + j) + 3 + k] = cJ[0][3 * j + k]
    for i in range(NJ):
        # F = IC_i S_i with S = [0; a]
        cross(ch.a[i], ch_h[i + 1], F)
        mv(cJ[i + 1], ch.a[i], &F[3])
        M[12 * (6 + i) + 6 + i] = ch.a[i][0] * F[3] + ch.a[i][1] * F[4] + ch.a[i][2] * F[5] + ch.arm[i]
        for j in range(i, 0, -1):
            force_to_parent(ch.R[j], ch.p[j], F, G)
            for k in range(6):
                F[k] = G[k]
            M[12 * (6 + j - 1) + 6 + i] = ch.a[j - 1][0] * F[3] + ch.a[j - 1][1] * F[4] + ch.a[j - 1][2] * F[5]
            M[12 * (6 + i) + 6 + j - 1] = M[12 * (6 + j - 1) + 6 + i]
        force_to_parent(ch.R[0], ch.p[0], F, G)
        for k in range(6):
            M[12 * k + 6 + i] = G[k]
            M[12 * (6 + i) + k] = G[k]


cdef int cholesky_solve(double* M, double* b, int n) except -1:
    # in-place: M overwritten by L, b by the solution
    cdef int i, j, k
    cdef double s
    for j in range(n):
        s = M[n * j + j]
        for k in range(j):
            s -= M[n * j + k] * M[n * j + k]
        if s <= 0.0:
            raise ValueError("mass matrix is not positive definite")
        M[n * j + j] = sqrt(s)
        for i in range(j + 1, n):
            s = M[n * i + j]
            for k in range(j):
                s -= M[n * i + k] * M[n * j + k]
            M[n * i + j] = s / M[n * j + j]
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= M[n * i + k] * b[k]
        b[i] = s / M[n * i + i]
    for i in range(n - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, n):
            s -= M[n * k + i] * b[k]
        b[i] = s / M[n * i + i]
    return 0


cdef void ee_kinematics(const double* model, const Chain* ch, double* R_fe, double* p_fe, double* J,
                        double* first_moment) noexcept:
    # J row-major 6x6; first_moment may be NULL
    cdef double Rs[NJ][9]
    cdef double ps[NJ][3]
    cdef double R[9]
    cdef double p[3]
    cdef double t[3]
    cdef double u[3]
    cdef double d[3]
    cdef int i, k
    for k in range(9):
        R[k] = 0.0
    R[0] = R[4] = R[8] = 1.0
    p[0] = p[1] = p[2] = 0.0
    if first_moment != NULL:
        first_moment[0] = first_moment[1] = first_moment[2] = 0.0
    for i in range(NJ):
        mv(R, ch.p[i], t)
        for k in range(3):
            ps[i][k] = p[k] + t[k]
            p[k] = ps[i][k]
        mm(R, ch.R[i], Rs[i])
        for k in range(9):
            R[k] = Rs[i][k]
        if first_moment != NULL:
            mv(R, ch.c[i], t)
            for k in range(3):
                first_moment[k] += ch.m[i] * (p[k] + t[k])
    mm(R, &model[11], R_fe)
    mv(R, &model[20], t)
    for k in range(3):
        p_fe[k] = p[k] + t[k]
    for i in range(NJ):
        # column i = [R_fe^T (a_f x (p_fe - p_i)); R_fe^T a_f] with a_f = R_i a_i
        mv(Rs[i], ch.a[i], u)
        for k in range(3):
            d[k] = p_fe[k] - ps[i][k]
        cross(u, d, t)
        mtv(R_fe, t, d)
        J[6 * 0 + i] = d[0]
        J[6 * 1 + i] = d[1]
        J[6 * 2 + i] = d[2]
        mtv(R_fe, u, d)
        J[6 * 3 + i] = d[0]
        J[6 * 4 + i] = d[1]
        J[6 * 5 + i] = d[2]


cdef void env_force(const double* env, const double* r_e, const double* R_ge, const double* v_e,
                    double* F) noexcept:
    cdef double rdot[3]
    cdef double f[3]
    cdef double pen, fn, vn
    cdef int kind = <int>env[0]
    cdef int k
    mv(R_ge, v_e, rdot)
    f[0] = f[1] = f[2] = 0.0
    if kind == 1:
        pen = env[1] * r_e[0] + env[2] * r_e[1] + env[3] * r_e[2] - env[4]
        if pen > 0.0:
            vn = env[1] * rdot[0] + env[2] * rdot[1] + env[3] * rdot[2]
            fn = env[5] * pen + env[12] * vn
            if fn < 0.0:
                fn = 0.0
            for k in range(3):
                f[k] = -fn * env[1 + k]
    elif kind == 2:
        for k in range(3):
            f[k] = -env[9 + k] * (r_e[k] - env[6 + k]) - env[12] * rdot[k]
    mtv(R_ge, f, F)
    F[3] = F[4] = F[5] = 0.0


cdef int ee_motion(const double* model, const double* env, const double* x, Chain* ch, double* R_gf,
                   double* R_fe, double* p_fe, double* J, double* V_e, double* r_e, double* F) except -1:
    cdef double R_ge[9]
    cdef double t[6]
    cdef int i, k
    if fabs(x[4]) >= M_PI / 2 - PITCH_GUARD:
        raise GimbalLock("fuselage pitch %.6f rad at gimbal lock" % x[4])
    rpy(&x[3], R_gf)
    build_chain(model, &x[6], ch)
    ee_kinematics(model, ch, R_fe, p_fe, J, NULL)
    motion_to_child(R_fe, p_fe, &x[12], V_e)
    for i in range(6):
        for k in range(6):
            V_e[i] += J[6 * i + k] * x[18 + k]
    mm(R_gf, R_fe, R_ge)
    mv(R_gf, p_fe, t)
    for k in range(3):
        r_e[k] = x[k] + t[k]
    env_force(env, r_e, R_ge, V_e, F)
    return 0


# ---------------------------------------------------------------- Python entry points

def inverse_dynamics(const double[::1] model, R_gf, q, xi, xidot, bint gravity):
    cdef double[::1] Rv = np.ascontiguousarray(R_gf, dtype=np.float64).ravel()
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(xi, dtype=np.float64)
    cdef double[::1] av = np.ascontiguousarray(xidot, dtype=np.float64)
    out = np.empty(12)
    cdef double[::1] ov = out
    cdef Chain ch
    build_chain(&model[0], &qv[0], &ch)
    rnea(&model[0], &ch, &Rv[0], &xv[0], &av[0], gravity, &ov[0])
    return out


def mass_matrix(const double[::1] model, q):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    out = np.empty((12, 12))
    cdef double[:, ::1] ov = out
    cdef Chain ch
    build_chain(&model[0], &qv[0], &ch)
    crba(&model[0], &ch, &ov[0, 0])
    return out


def ee_terms(const double[::1] model, q):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    R = np.empty((3, 3))
    p = np.empty(3)
    J = np.empty((6, 6))
    cdef double[:, ::1] Rv = R
    cdef double[::1] pv = p
    cdef double[:, ::1] Jv = J
    cdef Chain ch
    build_chain(&model[0], &qv[0], &ch)
    ee_kinematics(&model[0], &ch, &Rv[0, 0], &pv[0], &Jv[0, 0], NULL)
    return R, p, J


def control_terms(const double[::1] model, R_gf, q):
    cdef double[::1] Rg = np.ascontiguousarray(R_gf, dtype=np.float64).ravel()
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    g = np.empty(12)
    fm = np.empty(3)
    R = np.empty((3, 3))
    p = np.empty(3)
    J = np.empty((6, 6))
    cdef double[::1] gv = g
    cdef double[::1] fmv = fm
    cdef double[:, ::1] Rv = R
    cdef double[::1] pv = p
    cdef double[:, ::1] Jv = J
    cdef double zeros[12]
    cdef int k
    for k in range(12):
        zeros[k] = 0.0
    cdef Chain ch
    build_chain(&model[0], &qv[0], &ch)
    rnea(&model[0], &ch, &Rg[0], zeros, zeros, True, &gv[0])
    ee_kinematics(&model[0], &ch, &Rv[0, 0], &pv[0], &Jv[0, 0], &fmv[0])
    x_e = np.empty(6)
    J_ef = np.zeros((6, 6))
    T = np.zeros((6, 6))
    cdef double[::1] xv = x_e
    cdef double[:, ::1] Xv = J_ef
    cdef double[:, ::1] Tv = T
    cdef int i, j
    cdef double ca, sa, cb, tb
    cdef const double* Rp = &Rv[0, 0]
    xv[4] = atan2(-Rp[6], hypot(Rp[0], Rp[3]))
    if fabs(xv[4]) >= M_PI / 2 - PITCH_GUARD:
        raise GimbalLock(f"end-effector pitch {xv[4]:.9f} rad at gimbal lock")
    xv[3] = atan2(Rp[7], Rp[8])
    xv[5] = atan2(Rp[3], Rp[0])
    for k in range(3):
        xv[k] = pv[k]
    # J_ef = [[R^T, -R^T [p]x], [0, R^T]];  T = diag(R, Q^-1(x_e angles))
    for i in range(3):
        for j in range(3):
            Xv[i, j] = Rp[3 * j + i]
            Xv[3 + i, 3 + j] = Rp[3 * j + i]
            Tv[i, j] = Rp[3 * i + j]
        Xv[i, 3] = Rp[3 * 2 + i] * pv[1] - Rp[3 * 1 + i] * pv[2]
        Xv[i, 4] = Rp[3 * 0 + i] * pv[2] - Rp[3 * 2 + i] * pv[0]
        Xv[i, 5] = Rp[3 * 1 + i] * pv[0] - Rp[3 * 0 + i] * pv[1]
    ca = cos(xv[3])
    sa = sin(xv[3])
    cb = cos(xv[4])
    tb = tan(xv[4])
    Tv[3, 3] = 1.0
    Tv[3, 4] = sa * tb
    Tv[3, 5] = ca * tb
    Tv[4, 4] = ca
    Tv[4, 5] = -sa
    Tv[5, 4] = sa / cb
    Tv[5, 5] = ca / cb
    return g, fm, R, p, J, J_ef, T, x_e


def env_wrench(const double[::1] env, r_e, R_ge, v_e):
    cdef double[::1] rv = np.ascontiguousarray(r_e, dtype=np.float64)
    cdef double[::1] Rv = np.ascontiguousarray(R_ge, dtype=np.float64).ravel()
    cdef double[::1] vv = np.ascontiguousarray(v_e, dtype=np.float64)
    out = np.empty(6)
    cdef double[::1] ov = out
    env_force(&env[0], &rv[0], &Rv[0], &vv[0], &ov[0])
    return out


def ee_state(const double[::1] model, const double[::1] env, const double[::1] x):
    r_e = np.empty(3)
    F = np.empty(6)
    V_e = np.empty(6)
    cdef double[::1] rv = r_e
    cdef double[::1] Fv = F
    cdef double[::1] Vv = V_e
    cdef double R_gf[9]
    cdef double R_fe[9]
    cdef double p_fe[3]
    cdef double J[36]
    cdef Chain ch
    ee_motion(&model[0], &env[0], &x[0], &ch, R_gf, R_fe, p_fe, J, &Vv[0], &rv[0], &Fv[0])
    return r_e, F, V_e


cdef int derivative(const double* model, const double* damping, const double* env, const double* x,
                    const double* tau_b, double* o) except -1:
    cdef double R_gf[9]
    cdef double R_fe[9]
    cdef double p_fe[3]
    cdef double J[36]
    cdef double V_e[6]
    cdef double r_e[3]
    cdef double F[6]
    cdef double Fp[6]
    cdef double drag[6]
    cdef double rhs[12]
    cdef double h[12]
    cdef double M[144]
    cdef double zeros[12]
    cdef double ca, sa, cb, tb
    cdef int i, k
    cdef Chain ch
    ee_motion(model, env, x, &ch, R_gf, R_fe, p_fe, J, V_e, r_e, F)
    for k in range(12):
        zeros[k] = 0.0
    for i in range(6):
        drag[i] = 0.0
        for k in range(6):
            drag[i] += damping[6 * i + k] * x[12 + k]
    # J_ef^T F: force transported from {e} back to {f}
    force_to_parent(R_fe, p_fe, F, Fp)
    for i in range(6):
        rhs[i] = tau_b[i] + Fp[i] - drag[i]
        rhs[6 + i] = tau_b[6 + i]
        for k in range(6):
            rhs[6 + i] += J[6 * k + i] * F[k]
    rnea(model, &ch, R_gf, &x[12], zeros, True, h)
    crba(model, &ch, M)
    for i in range(12):
        rhs[i] -= h[i]
    cholesky_solve(M, rhs, 12)
    mv(R_gf, &x[12], &o[0])
    ca = cos(x[3])
    sa = sin(x[3])
    cb = cos(x[4])
    tb = tan(x[4])
    o[3] = x[15] + sa * tb * x[16] + ca * tb * x[17]
    o[4] = ca * x[16] - sa * x[17]
    o[5] = (sa * x[16] + ca * x[17]) / cb
    for k in range(6):
        o[6 + k] = x[18 + k]
    for k in range(12):
        o[12 + k] = rhs[k]
    o[24] = 0.0
    o[25] = 0.0
    o[26] = 0.0
    for k in range(12):
        o[24] += tau_b[k] * x[12 + k]
    for k in range(6):
        o[25] += F[k] * V_e[k]
        o[26] -= x[12 + k] * drag[k]
    return 0


def state_derivative(const double[::1] model, const double[:, ::1] damping, const double[::1] env,
                     const double[::1] x, const double[::1] tau_b):
    out = np.empty(27)
    cdef double[::1] o = out
    derivative(&model[0], &damping[0, 0], &env[0], &x[0], &tau_b[0], &o[0])
    return out


def rk4_step(const double[::1] model, const double[:, ::1] damping, const double[::1] env,
             const double[::1] x, const double[::1] tau_b, double dt):
    """One classical Runge-Kutta step with ``tau_b`` held constant."""
    out = np.empty(27)
    cdef double[::1] o = out
    cdef double k1[27]
    cdef double k2[27]
    cdef double k3[27]
    cdef double k4[27]
    cdef double xs[27]
    cdef int i
    cdef const double* m = &model[0]
    cdef const double* D = &damping[0, 0]
    cdef const double* e = &env[0]
    cdef const double* u = &tau_b[0]
    derivative(m, D, e, &x[0], u, k1)
    for i in range(27):
        xs[i] = x[i] + 0.5 * dt * k1[i]
    derivative(m, D, e, xs, u, k2)
    for i in range(27):
        xs[i] = x[i] + 0.5 * dt * k2[i]
    derivative(m, D, e, xs, u, k3)
    for i in range(27):
        xs[i] = x[i] + dt * k3[i]
    derivative(m, D, e, xs, u, k4)
    for i in range(27):
        o[i] = x[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return out
