# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels.

Line-for-line mirror of ``veloshield._kernels.purepy``: the same control
pipeline, the same operation order, the same libm calls, so both backends
produce bit-identical logs. Keep edits synchronized with that module.
"""
from libc.math cimport atan2, cos, isfinite, sin, sqrt, NAN

BACKEND = "native"

OK = 0
NONFINITE = 1
SINGULAR = 2
INFEASIBLE = 3


cdef int _di_pipeline(double t, double qx, double qy, double vx, double vy,
                      double asx, double asy,
                      double[:, ::1] obs, Py_ssize_t n_obs,
                      int law_kind, double kp, double gx, double gy, double sat,
                      double cvx, double cvy, double alpha,
                      int ctrl_kind, double k11, double k12, double k21, double k22,
                      int ff_mode, int dist_on, double dax, double day,
                      double dfreq, double dphase, double* res) nogil:
    cdef double dvx, dvy, nrm, scale, h, dact, nx, ny, slack, qsx, qsy
    cdef double ex, ey, ux, uy, ax, ay, ddx, ddy, di, hi, sv
    cdef double j11, j12, j21, j22, rwx, rwy, wx, wy, f
    cdef double jg11, jg12, jg21, jg22, gc1, gc2, fx, fy
    cdef Py_ssize_t i, act
    cdef bint active
    if law_kind == 0:
        dvx = -kp * (qx - gx)
        dvy = -kp * (qy - gy)
        if sat > 0.0:
            nrm = sqrt(dvx * dvx + dvy * dvy)
            if nrm > sat:
                scale = sat / nrm
                dvx = dvx * scale
                dvy = dvy * scale
    else:
        dvx = cvx
        dvy = cvy
    h = NAN
    act = -1
    qsx = dvx
    qsy = dvy
    nx = 0.0
    ny = 0.0
    dact = 0.0
    active = False
    if n_obs > 0:
        for i in range(n_obs):
            ddx = qx - obs[i, 0]
            ddy = qy - obs[i, 1]
            di = sqrt(ddx * ddx + ddy * ddy)
            hi = di - obs[i, 2]
            if i == 0 or hi < h:
                h = hi
                act = i
                dact = di
        if dact == 0.0:
            return 2
        nx = (qx - obs[act, 0]) / dact
        ny = (qy - obs[act, 1]) / dact
        slack = -(nx * dvx + ny * dvy) - alpha * h
        if slack > 0.0:
            qsx = dvx + slack * nx
            qsy = dvy + slack * ny
            active = True
    ex = vx - qsx
    ey = vy - qsy
    if ctrl_kind == 0:
        ux = -(k11 * ex + k12 * ey)
        uy = -(k21 * ex + k22 * ey)
    else:
        if ff_mode == 0:
            if law_kind == 0:
                j11 = -kp
                j12 = 0.0
                j21 = 0.0
                j22 = -kp
                if sat > 0.0:
                    rwx = -kp * (qx - gx)
                    rwy = -kp * (qy - gy)
                    nrm = sqrt(rwx * rwx + rwy * rwy)
                    if nrm > sat:
                        wx = rwx / nrm
                        wy = rwy / nrm
                        f = sat / nrm
                        j11 = f * (1.0 - wx * wx) * (-kp)
                        j12 = f * (-wx * wy) * (-kp)
                        j21 = f * (-wy * wx) * (-kp)
                        j22 = f * (1.0 - wy * wy) * (-kp)
            else:
                j11 = 0.0
                j12 = 0.0
                j21 = 0.0
                j22 = 0.0
            if active:
                slack = -(nx * dvx + ny * dvy) - alpha * h
                jg11 = (1.0 - nx * nx) / dact
                jg12 = (-nx * ny) / dact
                jg21 = (-ny * nx) / dact
                jg22 = (1.0 - ny * ny) / dact
                gc1 = -(nx * j11 + ny * j21 + dvx * jg11 + dvy * jg21) - alpha * nx
                gc2 = -(nx * j12 + ny * j22 + dvx * jg12 + dvy * jg22) - alpha * ny
                j11 = j11 + nx * gc1 + slack * jg11
                j12 = j12 + nx * gc2 + slack * jg12
                j21 = j21 + ny * gc1 + slack * jg21
                j22 = j22 + ny * gc2 + slack * jg22
            fx = j11 * vx + j12 * vy
            fy = j21 * vx + j22 * vy
        else:
            fx = asx
            fy = asy
        ux = fx - (k11 * ex + k12 * ey)
        uy = fy - (k21 * ex + k22 * ey)
    if dist_on != 0:
        sv = sin(dfreq * t + dphase)
        ax = ux + dax * sv
        ay = uy + day * sv
    else:
        ax = ux
        ay = uy
    res[0] = qsx
    res[1] = qsy
    res[2] = ex
    res[3] = ey
    res[4] = ux
    res[5] = uy
    res[6] = h
    res[7] = <double> act
    res[8] = ax
    res[9] = ay
    return 0


def run_double_integrator(double[::1] x0, Py_ssize_t nsteps, double dt,
                          double[:, ::1] obs,
                          int law_kind, double kp, double gx, double gy, double sat,
                          double cvx, double cvy,
                          double alpha, int ctrl_kind,
                          double k11, double k12, double k21, double k22, int ff_mode,
                          int dist_on, double dax, double day, double dfreq, double dphase,
                          double[::1] t_out, double[:, ::1] q_out, double[:, ::1] qd_out,
                          double[:, ::1] qs_out, double[:, ::1] u_out,
                          double[::1] h_out, double[::1] v_out, double[:, ::1] e_out,
                          long long[::1] act_out):
    cdef double qx = x0[0], qy = x0[1], vx = x0[2], vy = x0[3]
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef double asx = 0.0, asy = 0.0
    cdef double res[10]
    cdef Py_ssize_t n_obs = obs.shape[0]
    cdef Py_ssize_t k
    cdef double t, ex, ey
    cdef double a1x, a1y, a2x, a2y, a3x, a3y, a4x, a4y
    cdef double v1x, v1y, v2x, v2y, v3x, v3y, v4x, v4y
    cdef int code
    for k in range(nsteps + 1):
        t = k * dt
        if not (isfinite(qx) and isfinite(qy) and isfinite(vx) and isfinite(vy)):
            return NONFINITE, k
        code = _di_pipeline(t, qx, qy, vx, vy, asx, asy, obs, n_obs,
                            law_kind, kp, gx, gy, sat, cvx, cvy, alpha,
                            ctrl_kind, k11, k12, k21, k22, ff_mode,
                            dist_on, dax, day, dfreq, dphase, res)
        if code != 0:
            return code, k
        ex = res[2]
        ey = res[3]
        t_out[k] = t
        q_out[k, 0] = qx
        q_out[k, 1] = qy
        qd_out[k, 0] = vx
        qd_out[k, 1] = vy
        qs_out[k, 0] = res[0]
        qs_out[k, 1] = res[1]
        u_out[k, 0] = res[4]
        u_out[k, 1] = res[5]
        h_out[k] = res[6]
        v_out[k] = sqrt(0.5 * (ex * ex + ey * ey))
        e_out[k, 0] = ex
        e_out[k, 1] = ey
        act_out[k] = <long long> res[7]
        if k == nsteps:
            break
        if ff_mode == 1 and ctrl_kind == 1 and k >= 1:
            asx = (qs_out[k, 0] - qs_out[k - 1, 0]) / dt
            asy = (qs_out[k, 1] - qs_out[k - 1, 1]) / dt
        a1x = res[8]; a1y = res[9]; v1x = vx; v1y = vy
        code = _di_pipeline(t + half, qx + half * v1x, qy + half * v1y,
                            vx + half * a1x, vy + half * a1y, asx, asy, obs, n_obs,
                            law_kind, kp, gx, gy, sat, cvx, cvy, alpha,
                            ctrl_kind, k11, k12, k21, k22, ff_mode,
                            dist_on, dax, day, dfreq, dphase, res)
        if code != 0:
            return code, k
        a2x = res[8]; a2y = res[9]
        v2x = vx + half * a1x; v2y = vy + half * a1y
        code = _di_pipeline(t + half, qx + half * v2x, qy + half * v2y,
                            vx + half * a2x, vy + half * a2y, asx, asy, obs, n_obs,
                            law_kind, kp, gx, gy, sat, cvx, cvy, alpha,
                            ctrl_kind, k11, k12, k21, k22, ff_mode,
                            dist_on, dax, day, dfreq, dphase, res)
        if code != 0:
            return code, k
        a3x = res[8]; a3y = res[9]
        v3x = vx + half * a2x; v3y = vy + half * a2y
        code = _di_pipeline(t + dt, qx + dt * v3x, qy + dt * v3y,
                            vx + dt * a3x, vy + dt * a3y, asx, asy, obs, n_obs,
                            law_kind, kp, gx, gy, sat, cvx, cvy, alpha,
                            ctrl_kind, k11, k12, k21, k22, ff_mode,
                            dist_on, dax, day, dfreq, dphase, res)
        if code != 0:
            return code, k
        a4x = res[8]; a4y = res[9]
        v4x = vx + dt * a3x; v4y = vy + dt * a3y
        qx = qx + sixth * (v1x + 2.0 * v2x + 2.0 * v3x + v4x)
        qy = qy + sixth * (v1y + 2.0 * v2y + 2.0 * v3y + v4y)
        vx = vx + sixth * (a1x + 2.0 * a2x + 2.0 * a3x + a4x)
        vy = vy + sixth * (a1y + 2.0 * a2y + 2.0 * a3y + a4y)
    return OK, nsteps


cdef int _si_pipeline(double qx, double qy, double[:, ::1] obs, Py_ssize_t n_obs,
                      double kp, double gx, double gy, double sat, double alpha,
                      double* res) nogil:
    cdef double dvx, dvy, nrm, scale, h, dact, nx, ny, slack, qsx, qsy
    cdef double ddx, ddy, di, hi
    cdef Py_ssize_t i, act
    dvx = -kp * (qx - gx)
    dvy = -kp * (qy - gy)
    if sat > 0.0:
        nrm = sqrt(dvx * dvx + dvy * dvy)
        if nrm > sat:
            scale = sat / nrm
            dvx = dvx * scale
            dvy = dvy * scale
    h = NAN
    act = -1
    qsx = dvx
    qsy = dvy
    if n_obs > 0:
        dact = 0.0
        for i in range(n_obs):
            ddx = qx - obs[i, 0]
            ddy = qy - obs[i, 1]
            di = sqrt(ddx * ddx + ddy * ddy)
            hi = di - obs[i, 2]
            if i == 0 or hi < h:
                h = hi
                act = i
                dact = di
        if dact == 0.0:
            return 2
        nx = (qx - obs[act, 0]) / dact
        ny = (qy - obs[act, 1]) / dact
        slack = -(nx * dvx + ny * dvy) - alpha * h
        if slack > 0.0:
            qsx = dvx + slack * nx
            qsy = dvy + slack * ny
    res[0] = qsx
    res[1] = qsy
    res[2] = h
    res[3] = <double> act
    return 0


def run_kinematic_si(double[::1] x0, Py_ssize_t nsteps, double dt,
                     double[:, ::1] obs, double kp, double gx, double gy,
                     double sat, double alpha,
                     double[::1] t_out, double[:, ::1] q_out, double[:, ::1] qd_out,
                     double[:, ::1] qs_out, double[:, ::1] u_out,
                     double[::1] h_out, double[::1] v_out, double[:, ::1] e_out,
                     long long[::1] act_out):
    cdef double qx = x0[0], qy = x0[1]
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef double res[4]
    cdef Py_ssize_t n_obs = obs.shape[0]
    cdef Py_ssize_t k
    cdef double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y
    cdef int code
    for k in range(nsteps + 1):
        if not (isfinite(qx) and isfinite(qy)):
            return NONFINITE, k
        code = _si_pipeline(qx, qy, obs, n_obs, kp, gx, gy, sat, alpha, res)
        if code != 0:
            return code, k
        t_out[k] = k * dt
        q_out[k, 0] = qx
        q_out[k, 1] = qy
        qd_out[k, 0] = res[0]
        qd_out[k, 1] = res[1]
        qs_out[k, 0] = res[0]
        qs_out[k, 1] = res[1]
        u_out[k, 0] = res[0]
        u_out[k, 1] = res[1]
        h_out[k] = res[2]
        v_out[k] = 0.0
        e_out[k, 0] = 0.0
        e_out[k, 1] = 0.0
        act_out[k] = <long long> res[3]
        if k == nsteps:
            break
        k1x = res[0]; k1y = res[1]
        code = _si_pipeline(qx + half * k1x, qy + half * k1y, obs, n_obs,
                            kp, gx, gy, sat, alpha, res)
        if code != 0:
            return code, k
        k2x = res[0]; k2y = res[1]
        code = _si_pipeline(qx + half * k2x, qy + half * k2y, obs, n_obs,
                            kp, gx, gy, sat, alpha, res)
        if code != 0:
            return code, k
        k3x = res[0]; k3y = res[1]
        code = _si_pipeline(qx + dt * k3x, qy + dt * k3y, obs, n_obs,
                            kp, gx, gy, sat, alpha, res)
        if code != 0:
            return code, k
        k4x = res[0]; k4y = res[1]
        qx = qx + sixth * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        qy = qy + sixth * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    return OK, nsteps


cdef int _uni_pipeline(double x, double y, double psi,
                       double[:, ::1] obs, Py_ssize_t n_obs, double delta,
                       double kv, double komega, double gx, double gy, double sat,
                       double alpha, double r2, double* res) nogil:
    cdef double dgx, dgy, dg, vd, wd, h, dact, thact, vs, ws
    cdef double ddx, ddy, di, th, hi, d2, s, gxh, gyh, gph, a1, a2, b, resid
    cdef double denom, scale
    cdef Py_ssize_t i, act
    dgx = gx - x
    dgy = gy - y
    dg = sqrt(dgx * dgx + dgy * dgy)
    if dg == 0.0:
        vd = 0.0
        wd = 0.0
    else:
        vd = kv * dg
        if sat > 0.0 and vd > sat:
            vd = sat
        wd = -komega * (sin(psi) - dgy / dg)
    h = NAN
    act = -1
    vs = vd
    ws = wd
    if n_obs > 0:
        dact = 0.0
        thact = 0.0
        for i in range(n_obs):
            ddx = obs[i, 0] - x
            ddy = obs[i, 1] - y
            di = sqrt(ddx * ddx + ddy * ddy)
            th = atan2(ddy, ddx)
            hi = di - obs[i, 2] - delta * cos(psi - th)
            if i == 0 or hi < h:
                h = hi
                act = i
                dact = di
                thact = th
        if dact == 0.0:
            return 2
        ddx = obs[act, 0] - x
        ddy = obs[act, 1] - y
        d2 = dact * dact
        s = sin(psi - thact)
        gxh = -ddx / dact - delta * s * ddy / d2
        gyh = -ddy / dact + delta * s * ddx / d2
        gph = delta * s
        a1 = gxh * cos(psi) + gyh * sin(psi)
        a2 = gph
        b = -alpha * h
        resid = b - (a1 * vd + a2 * wd)
        if resid > 0.0:
            denom = a1 * a1 + a2 * a2 / r2
            if denom == 0.0:
                return 3
            scale = resid / denom
            vs = vd + a1 * scale
            ws = wd + (a2 / r2) * scale
    res[0] = vs
    res[1] = ws
    res[2] = h
    res[3] = <double> act
    return 0


def run_kinematic_unicycle(double[::1] x0, Py_ssize_t nsteps, double dt,
                           double[:, ::1] obs, double delta, double kv, double komega,
                           double gx, double gy, double sat, double alpha,
                           double weight_r,
                           double[::1] t_out, double[:, ::1] q_out,
                           double[:, ::1] qd_out, double[:, ::1] qs_out,
                           double[:, ::1] u_out, double[::1] h_out,
                           double[::1] v_out, double[:, ::1] e_out,
                           long long[::1] act_out):
    cdef double x = x0[0], y = x0[1], psi = x0[2]
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef double r2 = weight_r * weight_r
    cdef double res[4]
    cdef Py_ssize_t n_obs = obs.shape[0]
    cdef Py_ssize_t k
    cdef double vs, ws, cp, sp
    cdef double k1x, k1y, k1p, k2x, k2y, k2p, k3x, k3y, k3p, k4x, k4y, k4p
    cdef double v2, w2, p2, v3, w3, p3, v4, w4, p4
    cdef int code
    for k in range(nsteps + 1):
        if not (isfinite(x) and isfinite(y) and isfinite(psi)):
            return NONFINITE, k
        code = _uni_pipeline(x, y, psi, obs, n_obs, delta, kv, komega,
                             gx, gy, sat, alpha, r2, res)
        if code != 0:
            return code, k
        vs = res[0]; ws = res[1]
        cp = cos(psi)
        sp = sin(psi)
        t_out[k] = k * dt
        q_out[k, 0] = x
        q_out[k, 1] = y
        q_out[k, 2] = psi
        qd_out[k, 0] = vs * cp
        qd_out[k, 1] = vs * sp
        qd_out[k, 2] = ws
        qs_out[k, 0] = vs * cp
        qs_out[k, 1] = vs * sp
        qs_out[k, 2] = ws
        u_out[k, 0] = vs
        u_out[k, 1] = ws
        h_out[k] = res[2]
        v_out[k] = 0.0
        e_out[k, 0] = 0.0
        e_out[k, 1] = 0.0
        e_out[k, 2] = 0.0
        act_out[k] = <long long> res[3]
        if k == nsteps:
            break
        k1x = vs * cp; k1y = vs * sp; k1p = ws
        code = _uni_pipeline(x + half * k1x, y + half * k1y, psi + half * k1p,
                             obs, n_obs, delta, kv, komega, gx, gy, sat, alpha, r2, res)
        if code != 0:
            return code, k
        v2 = res[0]; w2 = res[1]
        p2 = psi + half * k1p
        k2x = v2 * cos(p2); k2y = v2 * sin(p2); k2p = w2
        code = _uni_pipeline(x + half * k2x, y + half * k2y, psi + half * k2p,
                             obs, n_obs, delta, kv, komega, gx, gy, sat, alpha, r2, res)
        if code != 0:
            return code, k
        v3 = res[0]; w3 = res[1]
        p3 = psi + half * k2p
        k3x = v3 * cos(p3); k3y = v3 * sin(p3); k3p = w3
        code = _uni_pipeline(x + dt * k3x, y + dt * k3y, psi + dt * k3p,
                             obs, n_obs, delta, kv, komega, gx, gy, sat, alpha, r2, res)
        if code != 0:
            return code, k
        v4 = res[0]; w4 = res[1]
        p4 = psi + dt * k3p
        k4x = v4 * cos(p4); k4y = v4 * sin(p4); k4p = w4
        x = x + sixth * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + sixth * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        psi = psi + sixth * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return OK, nsteps


cdef void _planar_pipeline(double t, double p, double phi, double pd, double phid,
                           double m0, double mL, double J0, double bt, double R,
                           double Km, double mgL, double umax,
                           double pmax, double pdot_d, double alpha,
                           double kpd, double kphi, double kphid,
                           int dist_on, double dav, double dfreq, double dphase,
                           double* res) nogil:
    cdef double h, cap, ps, uraw, u, ut, c, s, d12, rhs1, rhs2, det, ap, aphi
    cdef double e1, e2, quad, V
    h = pmax - p
    cap = alpha * h
    ps = pdot_d if pdot_d < cap else cap
    uraw = kpd * (pd - ps) + kphi * phi + kphid * phid
    u = uraw
    if u > umax:
        u = umax
    elif u < -umax:
        u = -umax
    if dist_on != 0:
        ut = u + dav * sin(dfreq * t + dphase)
    else:
        ut = u
    c = cos(phi)
    s = sin(phi)
    d12 = mL * c
    rhs1 = (Km / R) * ut - ((bt / R) * pd + (-bt - mL * phid * s) * phid)
    rhs2 = -Km * ut - (-bt * pd + bt * R * phid) - (-mgL * s)
    det = m0 * J0 - d12 * d12
    ap = (J0 * rhs1 - d12 * rhs2) / det
    aphi = (-d12 * rhs1 + m0 * rhs2) / det
    e1 = pd - ps
    e2 = phid
    quad = e1 * (m0 * e1 + d12 * e2) + e2 * (d12 * e1 + J0 * e2)
    V = sqrt(0.5 * quad)
    res[0] = ps
    res[1] = uraw
    res[2] = u
    res[3] = h
    res[4] = V
    res[5] = e1
    res[6] = e2
    res[7] = ap
    res[8] = aphi


def run_segway_planar(double[::1] x0, Py_ssize_t nsteps, double dt,
                      double m0, double mL, double J0, double bt, double R,
                      double Km, double mgL, double umax,
                      double pmax, double pdot_d, double alpha,
                      double kpd, double kphi, double kphid,
                      int dist_on, double dav, double dfreq, double dphase,
                      double[::1] t_out, double[:, ::1] q_out, double[:, ::1] qd_out,
                      double[:, ::1] qs_out, double[:, ::1] uraw_out,
                      double[:, ::1] u_out, double[::1] h_out, double[::1] v_out,
                      double[:, ::1] e_out, long long[::1] act_out):
    cdef double p = x0[0], phi = x0[1], pd = x0[2], phid = x0[3]
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef double res[9]
    cdef Py_ssize_t k
    cdef double t
    cdef double a1p, a1f, a1v, a1w, a2p, a2f, a2v, a2w
    cdef double a3p, a3f, a3v, a3w, a4p, a4f, a4v, a4w
    for k in range(nsteps + 1):
        t = k * dt
        if not (isfinite(p) and isfinite(phi) and isfinite(pd) and isfinite(phid)):
            return NONFINITE, k
        _planar_pipeline(t, p, phi, pd, phid, m0, mL, J0, bt, R, Km, mgL, umax,
                         pmax, pdot_d, alpha, kpd, kphi, kphid,
                         dist_on, dav, dfreq, dphase, res)
        t_out[k] = t
        q_out[k, 0] = p
        q_out[k, 1] = phi
        qd_out[k, 0] = pd
        qd_out[k, 1] = phid
        qs_out[k, 0] = res[0]
        qs_out[k, 1] = 0.0
        uraw_out[k, 0] = res[1]
        u_out[k, 0] = res[2]
        h_out[k] = res[3]
        v_out[k] = res[4]
        e_out[k, 0] = res[5]
        e_out[k, 1] = res[6]
        act_out[k] = 0
        if k == nsteps:
            break
        a1p = pd; a1f = phid; a1v = res[7]; a1w = res[8]
        _planar_pipeline(t + half, p + half * a1p, phi + half * a1f,
                         pd + half * a1v, phid + half * a1w,
                         m0, mL, J0, bt, R, Km, mgL, umax,
                         pmax, pdot_d, alpha, kpd, kphi, kphid,
                         dist_on, dav, dfreq, dphase, res)
        a2p = pd + half * a1v; a2f = phid + half * a1w; a2v = res[7]; a2w = res[8]
        _planar_pipeline(t + half, p + half * a2p, phi + half * a2f,
                         pd + half * a2v, phid + half * a2w,
                         m0, mL, J0, bt, R, Km, mgL, umax,
                         pmax, pdot_d, alpha, kpd, kphi, kphid,
                         dist_on, dav, dfreq, dphase, res)
        a3p = pd + half * a2v; a3f = phid + half * a2w; a3v = res[7]; a3w = res[8]
        _planar_pipeline(t + dt, p + dt * a3p, phi + dt * a3f,
                         pd + dt * a3v, phid + dt * a3w,
                         m0, mL, J0, bt, R, Km, mgL, umax,
                         pmax, pdot_d, alpha, kpd, kphi, kphid,
                         dist_on, dav, dfreq, dphase, res)
        a4p = pd + dt * a3v; a4f = phid + dt * a3w; a4v = res[7]; a4w = res[8]
        p = p + sixth * (a1p + 2.0 * a2p + 2.0 * a3p + a4p)
        phi = phi + sixth * (a1f + 2.0 * a2f + 2.0 * a3f + a4f)
        pd = pd + sixth * (a1v + 2.0 * a2v + 2.0 * a3v + a4v)
        phid = phid + sixth * (a1w + 2.0 * a2w + 2.0 * a3w + a4w)
    return OK, nsteps


cdef int _spatial_pipeline(double t, double x, double y, double psi, double phi,
                           double v, double phid, double psid,
                           double m0, double mL, double J0, double bt, double R,
                           double Km, double mgL, double umax,
                           double yaw_gain, double Jpsi, double bpsi,
                           double[:, ::1] obs, Py_ssize_t n_obs, double delta,
                           double kv, double komega, double gx, double gy, double sat,
                           double alpha, double r2,
                           double kpd, double kphi, double kphid, double kpsid,
                           int dist_on, double da1, double da2, double dfreq,
                           double dphase, double* res) nogil:
    cdef double dgx, dgy, dg, vd, wd, h, dact, thact, vs, ws
    cdef double ddx, ddy, di, th, hi, d2, s, gxh, gyh, gph, a1, a2, b, resid
    cdef double denom, scale, common, yaw, u1raw, u2raw, u1, u2, sv, u1t, u2t
    cdef double mean, c, s_, d12, rhs1, rhs2, det, av, aphi, apsi
    cdef Py_ssize_t i, act
    dgx = gx - x
    dgy = gy - y
    dg = sqrt(dgx * dgx + dgy * dgy)
    if dg == 0.0:
        vd = 0.0
        wd = 0.0
    else:
        vd = kv * dg
        if sat > 0.0 and vd > sat:
            vd = sat
        wd = -komega * (sin(psi) - dgy / dg)
    h = NAN
    act = -1
    vs = vd
    ws = wd
    if n_obs > 0:
        dact = 0.0
        thact = 0.0
        for i in range(n_obs):
            ddx = obs[i, 0] - x
            ddy = obs[i, 1] - y
            di = sqrt(ddx * ddx + ddy * ddy)
            th = atan2(ddy, ddx)
            hi = di - obs[i, 2] - delta * cos(psi - th)
            if i == 0 or hi < h:
                h = hi
                act = i
                dact = di
                thact = th
        if dact == 0.0:
            return 2
        ddx = obs[act, 0] - x
        ddy = obs[act, 1] - y
        d2 = dact * dact
        s = sin(psi - thact)
        gxh = -ddx / dact - delta * s * ddy / d2
        gyh = -ddy / dact + delta * s * ddx / d2
        gph = delta * s
        a1 = gxh * cos(psi) + gyh * sin(psi)
        a2 = gph
        b = -alpha * h
        resid = b - (a1 * vd + a2 * wd)
        if resid > 0.0:
            denom = a1 * a1 + a2 * a2 / r2
            if denom == 0.0:
                return 3
            scale = resid / denom
            vs = vd + a1 * scale
            ws = wd + (a2 / r2) * scale
    common = kpd * (v - vs) + kphi * phi + kphid * phid
    yaw = kpsid * (psid - ws)
    u1raw = common + yaw
    u2raw = common - yaw
    u1 = umax if u1raw > umax else (-umax if u1raw < -umax else u1raw)
    u2 = umax if u2raw > umax else (-umax if u2raw < -umax else u2raw)
    if dist_on != 0:
        sv = sin(dfreq * t + dphase)
        u1t = u1 + da1 * sv
        u2t = u2 + da2 * sv
    else:
        u1t = u1
        u2t = u2
    mean = 0.5 * (u1t + u2t)
    c = cos(phi)
    s_ = sin(phi)
    d12 = mL * c
    rhs1 = (Km / R) * mean - ((bt / R) * v + (-bt - mL * phid * s_) * phid)
    rhs2 = -Km * mean - (-bt * v + bt * R * phid) - (-mgL * s_)
    det = m0 * J0 - d12 * d12
    av = (J0 * rhs1 - d12 * rhs2) / det
    aphi = (-d12 * rhs1 + m0 * rhs2) / det
    apsi = (yaw_gain * (u2t - u1t) - bpsi * psid) / Jpsi
    res[0] = vs
    res[1] = ws
    res[2] = h
    res[3] = <double> act
    res[4] = u1raw
    res[5] = u2raw
    res[6] = u1
    res[7] = u2
    res[8] = av
    res[9] = aphi
    res[10] = apsi
    return 0


def run_segway_spatial(double[::1] x0, Py_ssize_t nsteps, double dt,
                       double m0, double mL, double J0, double bt, double R,
                       double Km, double mgL, double umax,
                       double width, double Jpsi, double bpsi,
                       double[:, ::1] obs, double delta, double kv, double komega,
                       double gx, double gy, double sat, double alpha,
                       double weight_r, double kpd, double kphi, double kphid,
                       double kpsid,
                       int dist_on, double da1, double da2, double dfreq, double dphase,
                       double[::1] t_out, double[:, ::1] q_out, double[:, ::1] qd_out,
                       double[:, ::1] qs_out, double[:, ::1] uraw_out,
                       double[:, ::1] u_out, double[::1] h_out, double[::1] v_out,
                       double[:, ::1] e_out, long long[::1] act_out):
    cdef double x = x0[0], y = x0[1], psi = x0[2], phi = x0[3]
    cdef double v = x0[4], phid = x0[5], psid = x0[6]
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef double r2 = weight_r * weight_r
    cdef double yaw_gain = Km * width / (2.0 * R)
    cdef double res[11]
    cdef Py_ssize_t n_obs = obs.shape[0]
    cdef Py_ssize_t k
    cdef double t, vs, ws, cp, sp, e1, e2, e3, e4
    cdef double s10, s11, s12, s13, s14, s15, s16
    cdef double s20, s21, s22, s23, s24, s25, s26
    cdef double s30, s31, s32, s33, s34, s35, s36
    cdef double s40, s41, s42, s43, s44, s45, s46
    cdef double x20, x21, x22, x23, x24, x25, x26
    cdef double x30, x31, x32, x33, x34, x35, x36
    cdef double x40, x41, x42, x43, x44, x45, x46
    cdef int code
    for k in range(nsteps + 1):
        t = k * dt
        if not (isfinite(x) and isfinite(y) and isfinite(psi) and isfinite(phi)
                and isfinite(v) and isfinite(phid) and isfinite(psid)):
            return NONFINITE, k
        code = _spatial_pipeline(t, x, y, psi, phi, v, phid, psid,
                                 m0, mL, J0, bt, R, Km, mgL, umax,
                                 yaw_gain, Jpsi, bpsi, obs, n_obs, delta,
                                 kv, komega, gx, gy, sat, alpha, r2,
                                 kpd, kphi, kphid, kpsid,
                                 dist_on, da1, da2, dfreq, dphase, res)
        if code != 0:
            return code, k
        vs = res[0]; ws = res[1]
        cp = cos(psi)
        sp = sin(psi)
        t_out[k] = t
        q_out[k, 0] = x
        q_out[k, 1] = y
        q_out[k, 2] = psi
        q_out[k, 3] = phi
        qd_out[k, 0] = v * cp
        qd_out[k, 1] = v * sp
        qd_out[k, 2] = psid
        qd_out[k, 3] = phid
        qs_out[k, 0] = vs * cp
        qs_out[k, 1] = vs * sp
        qs_out[k, 2] = ws
        qs_out[k, 3] = 0.0
        uraw_out[k, 0] = res[4]
        uraw_out[k, 1] = res[5]
        u_out[k, 0] = res[6]
        u_out[k, 1] = res[7]
        h_out[k] = res[2]
        e1 = (v - vs) * cp
        e2 = (v - vs) * sp
        e3 = psid - ws
        e4 = phid
        v_out[k] = sqrt(0.5 * (e1 * e1 + e2 * e2 + e3 * e3 + e4 * e4))
        e_out[k, 0] = e1
        e_out[k, 1] = e2
        e_out[k, 2] = e3
        e_out[k, 3] = e4
        act_out[k] = <long long> res[3]
        if k == nsteps:
            break
        s10 = v * cp; s11 = v * sp; s12 = psid; s13 = phid
        s14 = res[8]; s15 = res[9]; s16 = res[10]
        x20 = x + half * s10; x21 = y + half * s11; x22 = psi + half * s12
        x23 = phi + half * s13; x24 = v + half * s14; x25 = phid + half * s15
        x26 = psid + half * s16
        code = _spatial_pipeline(t + half, x20, x21, x22, x23, x24, x25, x26,
                                 m0, mL, J0, bt, R, Km, mgL, umax,
                                 yaw_gain, Jpsi, bpsi, obs, n_obs, delta,
                                 kv, komega, gx, gy, sat, alpha, r2,
                                 kpd, kphi, kphid, kpsid,
                                 dist_on, da1, da2, dfreq, dphase, res)
        if code != 0:
            return code, k
        s20 = x24 * cos(x22); s21 = x24 * sin(x22); s22 = x26; s23 = x25
        s24 = res[8]; s25 = res[9]; s26 = res[10]
        x30 = x + half * s20; x31 = y + half * s21; x32 = psi + half * s22
        x33 = phi + half * s23; x34 = v + half * s24; x35 = phid + half * s25
        x36 = psid + half * s26
        code = _spatial_pipeline(t + half, x30, x31, x32, x33, x34, x35, x36,
                                 m0, mL, J0, bt, R, Km, mgL, umax,
                                 yaw_gain, Jpsi, bpsi, obs, n_obs, delta,
                                 kv, komega, gx, gy, sat, alpha, r2,
                                 kpd, kphi, kphid, kpsid,
                                 dist_on, da1, da2, dfreq, dphase, res)
        if code != 0:
            return code, k
        s30 = x34 * cos(x32); s31 = x34 * sin(x32); s32 = x36; s33 = x35
        s34 = res[8]; s35 = res[9]; s36 = res[10]
        x40 = x + dt * s30; x41 = y + dt * s31; x42 = psi + dt * s32
        x43 = phi + dt * s33; x44 = v + dt * s34; x45 = phid + dt * s35
        x46 = psid + dt * s36
        code = _spatial_pipeline(t + dt, x40, x41, x42, x43, x44, x45, x46,
                                 m0, mL, J0, bt, R, Km, mgL, umax,
                                 yaw_gain, Jpsi, bpsi, obs, n_obs, delta,
                                 kv, komega, gx, gy, sat, alpha, r2,
                                 kpd, kphi, kphid, kpsid,
                                 dist_on, da1, da2, dfreq, dphase, res)
        if code != 0:
            return code, k
        s40 = x44 * cos(x42); s41 = x44 * sin(x42); s42 = x46; s43 = x45
        s44 = res[8]; s45 = res[9]; s46 = res[10]
        x = x + sixth * (s10 + 2.0 * s20 + 2.0 * s30 + s40)
        y = y + sixth * (s11 + 2.0 * s21 + 2.0 * s31 + s41)
        psi = psi + sixth * (s12 + 2.0 * s22 + 2.0 * s32 + s42)
        phi = phi + sixth * (s13 + 2.0 * s23 + 2.0 * s33 + s43)
        v = v + sixth * (s14 + 2.0 * s24 + 2.0 * s34 + s44)
        phid = phid + sixth * (s15 + 2.0 * s25 + 2.0 * s35 + s45)
        psid = psid + sixth * (s16 + 2.0 * s26 + 2.0 * s36 + s46)
    return OK, nsteps


cdef void _arm_pipeline(double t, double q1, double q2, double v1, double v2,
                        double a1, double a2, double a3, double g1, double g2,
                        double b1, double b2, double taumax,
                        double mu1, double mu2, int ctrl_kind,
                        double k11, double k12, double k21, double k22,
                        int dist_on, double da1, double da2, double dfreq,
                        double dphase, double* res) nogil:
    cdef double e1, e2, c2, s2, d11, d12, d22, c12, G1, G2
    cdef double u1, u2, u1raw, u2raw, sv, u1t, u2t, h12, cm1, cm2
    cdef double cv1, cv2, rhs1, rhs2, det, acc1, acc2, quad, V
    e1 = v1 - mu1
    e2 = v2 - mu2
    c2 = cos(q2)
    s2 = sin(q2)
    d11 = a1 + 2.0 * a2 * c2
    d12 = a3 + a2 * c2
    d22 = a3
    c12 = cos(q1 + q2)
    G1 = g1 * cos(q1) + g2 * c12
    G2 = g2 * c12
    if ctrl_kind == 0:
        u1 = -(k11 * e1 + k12 * e2)
        u2 = -(k21 * e1 + k22 * e2)
    elif ctrl_kind == 1:
        u1 = G1 - (k11 * e1 + k12 * e2)
        u2 = G2 - (k21 * e1 + k22 * e2)
    else:
        h12 = a2 * s2
        cm1 = h12 * (-v2) * mu1 + h12 * (-(v1 + v2)) * mu2 + b1 * mu1
        cm2 = h12 * v1 * mu1 + b2 * mu2
        u1 = cm1 + G1 - (k11 * e1 + k12 * e2)
        u2 = cm2 + G2 - (k21 * e1 + k22 * e2)
    u1raw = u1
    u2raw = u2
    if taumax > 0.0:
        u1 = taumax if u1 > taumax else (-taumax if u1 < -taumax else u1)
        u2 = taumax if u2 > taumax else (-taumax if u2 < -taumax else u2)
    if dist_on != 0:
        sv = sin(dfreq * t + dphase)
        u1t = u1 + da1 * sv
        u2t = u2 + da2 * sv
    else:
        u1t = u1
        u2t = u2
    h12 = a2 * s2
    cv1 = h12 * (-v2 * v1 - (v1 + v2) * v2) + b1 * v1
    cv2 = h12 * (v1 * v1) + b2 * v2
    rhs1 = u1t - cv1 - G1
    rhs2 = u2t - cv2 - G2
    det = d11 * d22 - d12 * d12
    acc1 = (d22 * rhs1 - d12 * rhs2) / det
    acc2 = (-d12 * rhs1 + d11 * rhs2) / det
    quad = e1 * (d11 * e1 + d12 * e2) + e2 * (d12 * e1 + d22 * e2)
    V = sqrt(0.5 * quad)
    res[0] = u1raw
    res[1] = u2raw
    res[2] = u1
    res[3] = u2
    res[4] = V
    res[5] = e1
    res[6] = e2
    res[7] = acc1
    res[8] = acc2


def run_arm(double[::1] x0, Py_ssize_t nsteps, double dt,
            double a1, double a2, double a3, double g1, double g2,
            double b1, double b2, double taumax,
            double mu1, double mu2, int ctrl_kind,
            double k11, double k12, double k21, double k22,
            int dist_on, double da1, double da2, double dfreq, double dphase,
            double[::1] t_out, double[:, ::1] q_out, double[:, ::1] qd_out,
            double[:, ::1] qs_out, double[:, ::1] uraw_out, double[:, ::1] u_out,
            double[::1] h_out, double[::1] v_out, double[:, ::1] e_out,
            long long[::1] act_out):
    cdef double q1 = x0[0], q2 = x0[1], v1 = x0[2], v2 = x0[3]
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef double res[9]
    cdef Py_ssize_t k
    cdef double t
    cdef double s10, s11, s12, s13, s20, s21, s22, s23
    cdef double s30, s31, s32, s33, s40, s41, s42, s43
    for k in range(nsteps + 1):
        t = k * dt
        if not (isfinite(q1) and isfinite(q2) and isfinite(v1) and isfinite(v2)):
            return NONFINITE, k
        _arm_pipeline(t, q1, q2, v1, v2, a1, a2, a3, g1, g2, b1, b2, taumax,
                      mu1, mu2, ctrl_kind, k11, k12, k21, k22,
                      dist_on, da1, da2, dfreq, dphase, res)
        t_out[k] = t
        q_out[k, 0] = q1
        q_out[k, 1] = q2
        qd_out[k, 0] = v1
        qd_out[k, 1] = v2
        qs_out[k, 0] = mu1
        qs_out[k, 1] = mu2
        uraw_out[k, 0] = res[0]
        uraw_out[k, 1] = res[1]
        u_out[k, 0] = res[2]
        u_out[k, 1] = res[3]
        h_out[k] = NAN
        v_out[k] = res[4]
        e_out[k, 0] = res[5]
        e_out[k, 1] = res[6]
        act_out[k] = -1
        if k == nsteps:
            break
        s10 = v1; s11 = v2; s12 = res[7]; s13 = res[8]
        _arm_pipeline(t + half, q1 + half * s10, q2 + half * s11,
                      v1 + half * s12, v2 + half * s13,
                      a1, a2, a3, g1, g2, b1, b2, taumax,
                      mu1, mu2, ctrl_kind, k11, k12, k21, k22,
                      dist_on, da1, da2, dfreq, dphase, res)
        s20 = v1 + half * s12; s21 = v2 + half * s13; s22 = res[7]; s23 = res[8]
        _arm_pipeline(t + half, q1 + half * s20, q2 + half * s21,
                      v1 + half * s22, v2 + half * s23,
                      a1, a2, a3, g1, g2, b1, b2, taumax,
                      mu1, mu2, ctrl_kind, k11, k12, k21, k22,
                      dist_on, da1, da2, dfreq, dphase, res)
        s30 = v1 + half * s22; s31 = v2 + half * s23; s32 = res[7]; s33 = res[8]
        _arm_pipeline(t + dt, q1 + dt * s30, q2 + dt * s31,
                      v1 + dt * s32, v2 + dt * s33,
                      a1, a2, a3, g1, g2, b1, b2, taumax,
                      mu1, mu2, ctrl_kind, k11, k12, k21, k22,
                      dist_on, da1, da2, dfreq, dphase, res)
        s40 = v1 + dt * s32; s41 = v2 + dt * s33; s42 = res[7]; s43 = res[8]
        q1 = q1 + sixth * (s10 + 2.0 * s20 + 2.0 * s30 + s40)
        q2 = q2 + sixth * (s11 + 2.0 * s21 + 2.0 * s31 + s41)
        v1 = v1 + sixth * (s12 + 2.0 * s22 + 2.0 * s32 + s42)
        v2 = v2 + sixth * (s13 + 2.0 * s23 + 2.0 * s33 + s43)
    return OK, nsteps
