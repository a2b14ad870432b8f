"""Pure-Python simulation kernels.

One function per scenario family advances the closed loop with classical
fixed-step fourth-order integration and fills preallocated log arrays.
The compiled extension ``veloshield._kernels._native`` implements the same
functions with the same arithmetic, operation for operation, so both
backends produce bit-identical trajectories; keep any edit here in
lockstep with the .pyx source.

The control pipeline (desired velocity -> safe-velocity filter ->
tracking controller -> input clamp -> dynamics) is evaluated inside the
integrator's right-hand side, i.e. at every integration stage: the loop
integrates the continuous-time closed loop rather than a sampled one.
The one exception is the finite-difference feedforward option, whose
acceleration estimate is frozen over each step because it is built from
logged history.

Status codes returned as (status, step): 0 ok, 1 non-finite state,
2 singular barrier gradient, 3 infeasible filter constraint.
"""
from math import atan2, cos, exp, isfinite, sin, sqrt

BACKEND = "python"

OK = 0
NONFINITE = 1
SINGULAR = 2
INFEASIBLE = 3


def run_double_integrator(x0, nsteps, dt, obs,
                          law_kind, kp, gx, gy, sat, cvx, cvy,
                          alpha, ctrl_kind, k11, k12, k21, k22, ff_mode,
                          dist_on, dax, day, dfreq, dphase,
                          t_out, q_out, qd_out, qs_out, u_out,
                          h_out, v_out, e_out, act_out):
    """Planar double integrator qddot = u + d(t) under the velocity filter.

    Barrier: closest circular obstacle (clearance family); obs is an
    (n_obs, 3) array of (ox, oy, r), possibly empty. Controller 0 is the
    velocity-damping law u = -K e; controller 1 is computed torque
    u = qddot_s - K e with feedforward mode 0 (exact chain rule) or 1
    (causal backward difference of the logged safe velocity).
    """
    n_obs = obs.shape[0]
    qx = float(x0[0]); qy = float(x0[1]); vx = float(x0[2]); vy = float(x0[3])
    half = 0.5 * dt
    sixth = dt / 6.0
    asx = 0.0  # frozen feedforward accel (finite-difference mode)
    asy = 0.0

    def pipeline(t, qx, qy, vx, vy, asx, asy):
        # desired velocity
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
        # closest-obstacle barrier and filter
        h = float("nan")
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
                return None
            nx = (qx - obs[act, 0]) / dact
            ny = (qy - obs[act, 1]) / dact
            slack = -(nx * dvx + ny * dvy) - alpha * h
            if slack > 0.0:
                qsx = dvx + slack * nx
                qsy = dvy + slack * ny
                active = True
        ex = vx - qsx
        ey = vy - qsy
        # controller
        if ctrl_kind == 0:
            ux = -(k11 * ex + k12 * ey)
            uy = -(k21 * ex + k22 * ey)
        else:
            if ff_mode == 0:
                # exact feedforward: qddot_s = J_s(q) qdot by the chain rule
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
        return qsx, qsy, ex, ey, ux, uy, h, act, ax, ay

    for k in range(nsteps + 1):
        t = k * dt
        if not (isfinite(qx) and isfinite(qy) and isfinite(vx) and isfinite(vy)):
            return NONFINITE, k
        res = pipeline(t, qx, qy, vx, vy, asx, asy)
        if res is None:
            return SINGULAR, k
        qsx, qsy, ex, ey, ux, uy, h, act, ax, ay = res
        t_out[k] = t
        q_out[k, 0] = qx
        q_out[k, 1] = qy
        qd_out[k, 0] = vx
        qd_out[k, 1] = vy
        qs_out[k, 0] = qsx
        qs_out[k, 1] = qsy
        u_out[k, 0] = ux
        u_out[k, 1] = uy
        h_out[k] = h
        v_out[k] = sqrt(0.5 * (ex * ex + ey * ey))
        e_out[k, 0] = ex
        e_out[k, 1] = ey
        act_out[k] = act
        if k == nsteps:
            break
        if ff_mode == 1 and ctrl_kind == 1 and k >= 1:
            asx = (qs_out[k, 0] - qs_out[k - 1, 0]) / dt
            asy = (qs_out[k, 1] - qs_out[k - 1, 1]) / dt
        # RK4 stages (stage 1 reuses the logged pipeline values)
        a1x = ax; a1y = ay; v1x = vx; v1y = vy
        res = pipeline(t + half, qx + half * v1x, qy + half * v1y,
                       vx + half * a1x, vy + half * a1y, asx, asy)
        if res is None:
            return SINGULAR, k
        a2x = res[8]; a2y = res[9]
        v2x = vx + half * a1x; v2y = vy + half * a1y
        res = pipeline(t + half, qx + half * v2x, qy + half * v2y,
                       vx + half * a2x, vy + half * a2y, asx, asy)
        if res is None:
            return SINGULAR, k
        a3x = res[8]; a3y = res[9]
        v3x = vx + half * a2x; v3y = vy + half * a2y
        res = pipeline(t + dt, qx + dt * v3x, qy + dt * v3y,
                       vx + dt * a3x, vy + dt * a3y, asx, asy)
        if res is None:
            return SINGULAR, k
        a4x = res[8]; a4y = res[9]
        v4x = vx + dt * a3x; v4y = vy + dt * a3y
        qx = qx + sixth * (v1x + 2.0 * v2x + 2.0 * v3x + v4x)
        qy = qy + sixth * (v1y + 2.0 * v2y + 2.0 * v3y + v4y)
        vx = vx + sixth * (a1x + 2.0 * a2x + 2.0 * a3x + a4x)
        vy = vy + sixth * (a1y + 2.0 * a2y + 2.0 * a3y + a4y)
    return OK, nsteps


def run_kinematic_si(x0, nsteps, dt, obs, kp, gx, gy, sat, alpha,
                     t_out, q_out, qd_out, qs_out, u_out,
                     h_out, v_out, e_out, act_out):
    """Single-integrator kinematics qdot = mu_s with the clearance filter."""
    n_obs = obs.shape[0]
    qx = float(x0[0]); qy = float(x0[1])
    half = 0.5 * dt
    sixth = dt / 6.0

    def pipeline(qx, qy):
        dvx = -kp * (qx - gx)
        dvy = -kp * (qy - gy)
        if sat > 0.0:
            nrm = sqrt(dvx * dvx + dvy * dvy)
            if nrm > sat:
                scale = sat / nrm
                dvx = dvx * scale
                dvy = dvy * scale
        h = float("nan")
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
                return None
            nx = (qx - obs[act, 0]) / dact
            ny = (qy - obs[act, 1]) / dact
            slack = -(nx * dvx + ny * dvy) - alpha * h
            if slack > 0.0:
                qsx = dvx + slack * nx
                qsy = dvy + slack * ny
        return qsx, qsy, h, act

    for k in range(nsteps + 1):
        if not (isfinite(qx) and isfinite(qy)):
            return NONFINITE, k
        res = pipeline(qx, qy)
        if res is None:
            return SINGULAR, k
        qsx, qsy, h, act = res
        t_out[k] = k * dt
        q_out[k, 0] = qx
        q_out[k, 1] = qy
        qd_out[k, 0] = qsx
        qd_out[k, 1] = qsy
        qs_out[k, 0] = qsx
        qs_out[k, 1] = qsy
        u_out[k, 0] = qsx
        u_out[k, 1] = qsy
        h_out[k] = h
        v_out[k] = 0.0
        e_out[k, 0] = 0.0
        e_out[k, 1] = 0.0
        act_out[k] = act
        if k == nsteps:
            break
        k1x = qsx; k1y = qsy
        res = pipeline(qx + half * k1x, qy + half * k1y)
        if res is None:
            return SINGULAR, k
        k2x = res[0]; k2y = res[1]
        res = pipeline(qx + half * k2x, qy + half * k2y)
        if res is None:
            return SINGULAR, k
        k3x = res[0]; k3y = res[1]
        res = pipeline(qx + dt * k3x, qy + dt * k3y)
        if res is None:
            return SINGULAR, k
        k4x = res[0]; k4y = res[1]
        qx = qx + sixth * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        qy = qy + sixth * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    return OK, nsteps


def run_kinematic_unicycle(x0, nsteps, dt, obs, delta, kv, komega, gx, gy, sat,
                           alpha, weight_r,
                           t_out, q_out, qd_out, qs_out, u_out,
                           h_out, v_out, e_out, act_out):
    """Unicycle kinematics under the heading barrier and weighted filter.

    State (x, y, psi); reduced input mu = (v, omega); weight diag{1, R^2}.
    """
    n_obs = obs.shape[0]
    x = float(x0[0]); y = float(x0[1]); psi = float(x0[2])
    half = 0.5 * dt
    sixth = dt / 6.0
    r2 = weight_r * weight_r

    def pipeline(x, y, psi):
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
        h = float("nan")
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
                return None
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
                    return -2
                scale = resid / denom
                vs = vd + a1 * scale
                ws = wd + (a2 / r2) * scale
        return vs, ws, h, act

    for k in range(nsteps + 1):
        if not (isfinite(x) and isfinite(y) and isfinite(psi)):
            return NONFINITE, k
        res = pipeline(x, y, psi)
        if res is None:
            return SINGULAR, k
        if res == -2:
            return INFEASIBLE, k
        vs, ws, h, act = res
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
        h_out[k] = h
        v_out[k] = 0.0
        e_out[k, 0] = 0.0
        e_out[k, 1] = 0.0
        e_out[k, 2] = 0.0
        act_out[k] = act
        if k == nsteps:
            break
        k1x = vs * cp; k1y = vs * sp; k1p = ws
        res = pipeline(x + half * k1x, y + half * k1y, psi + half * k1p)
        if res is None:
            return SINGULAR, k
        if res == -2:
            return INFEASIBLE, k
        v2, w2 = res[0], res[1]
        p2 = psi + half * k1p
        k2x = v2 * cos(p2); k2y = v2 * sin(p2); k2p = w2
        res = pipeline(x + half * k2x, y + half * k2y, psi + half * k2p)
        if res is None:
            return SINGULAR, k
        if res == -2:
            return INFEASIBLE, k
        v3, w3 = res[0], res[1]
        p3 = psi + half * k2p
        k3x = v3 * cos(p3); k3y = v3 * sin(p3); k3p = w3
        res = pipeline(x + dt * k3x, y + dt * k3y, psi + dt * k3p)
        if res is None:
            return SINGULAR, k
        if res == -2:
            return INFEASIBLE, k
        v4, w4 = res[0], res[1]
        p4 = psi + dt * k3p
        k4x = v4 * cos(p4); k4y = v4 * sin(p4); k4p = w4
        x = x + sixth * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + sixth * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        psi = psi + sixth * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return OK, nsteps


def run_segway_planar(x0, nsteps, dt, m0, mL, J0, bt, R, Km, mgL, umax,
                      pmax, pdot_d, alpha, kpd, kphi, kphid,
                      dist_on, dav, dfreq, dphase,
                      t_out, q_out, qd_out, qs_out, uraw_out, u_out,
                      h_out, v_out, e_out, act_out):
    """Planar balancing robot driving toward a wall at pmax.

    Safe forward velocity pdot_s = min(pdot_d, alpha (pmax - p)); voltage
    law on (pdot error, pitch, pitch rate), clamped to +/- umax.
    """
    p = float(x0[0]); phi = float(x0[1]); pd = float(x0[2]); phid = float(x0[3])
    half = 0.5 * dt
    sixth = dt / 6.0

    def pipeline(t, p, phi, pd, phid):
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
        return ps, uraw, u, h, V, e1, e2, ap, aphi

    for k in range(nsteps + 1):
        t = k * dt
        if not (isfinite(p) and isfinite(phi) and isfinite(pd) and isfinite(phid)):
            return NONFINITE, k
        ps, uraw, u, h, V, e1, e2, ap, aphi = pipeline(t, p, phi, pd, phid)
        t_out[k] = t
        q_out[k, 0] = p
        q_out[k, 1] = phi
        qd_out[k, 0] = pd
        qd_out[k, 1] = phid
        qs_out[k, 0] = ps
        qs_out[k, 1] = 0.0
        uraw_out[k, 0] = uraw
        u_out[k, 0] = u
        h_out[k] = h
        v_out[k] = V
        e_out[k, 0] = e1
        e_out[k, 1] = e2
        act_out[k] = 0
        if k == nsteps:
            break
        a1p = pd; a1f = phid; a1v = ap; a1w = aphi
        r = pipeline(t + half, p + half * a1p, phi + half * a1f,
                     pd + half * a1v, phid + half * a1w)
        a2p = pd + half * a1v; a2f = phid + half * a1w; a2v = r[7]; a2w = r[8]
        r = pipeline(t + half, p + half * a2p, phi + half * a2f,
                     pd + half * a2v, phid + half * a2w)
        a3p = pd + half * a2v; a3f = phid + half * a2w; a3v = r[7]; a3w = r[8]
        r = pipeline(t + dt, p + dt * a3p, phi + dt * a3f,
                     pd + dt * a3v, phid + dt * a3w)
        a4p = pd + dt * a3v; a4f = phid + dt * a3w; a4v = r[7]; a4w = r[8]
        p = p + sixth * (a1p + 2.0 * a2p + 2.0 * a3p + a4p)
        phi = phi + sixth * (a1f + 2.0 * a2f + 2.0 * a3f + a4f)
        pd = pd + sixth * (a1v + 2.0 * a2v + 2.0 * a3v + a4v)
        phid = phid + sixth * (a1w + 2.0 * a2w + 2.0 * a3w + a4w)
    return OK, nsteps


def run_segway_spatial(x0, nsteps, dt, m0, mL, J0, bt, R, Km, mgL, umax,
                       width, Jpsi, bpsi, obs, delta, kv, komega, gx, gy, sat,
                       alpha, weight_r, kpd, kphi, kphid, kpsid,
                       dist_on, da1, da2, dfreq, dphase,
                       t_out, q_out, qd_out, qs_out, uraw_out, u_out,
                       h_out, v_out, e_out, act_out):
    """Spatial balancing robot tracking a unicycle-model safe velocity.

    State (x, y, psi, phi, v, phidot, psidot). The planar wheel/pitch
    dynamics are driven by the mean wheel voltage; yaw by the differential.
    Logged configuration is (x, y, psi, phi).
    """
    n_obs = obs.shape[0]
    x = float(x0[0]); y = float(x0[1]); psi = float(x0[2]); phi = float(x0[3])
    v = float(x0[4]); phid = float(x0[5]); psid = float(x0[6])
    half = 0.5 * dt
    sixth = dt / 6.0
    r2 = weight_r * weight_r
    yaw_gain = Km * width / (2.0 * R)

    def pipeline(t, x, y, psi, phi, v, phid, psid):
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
        h = float("nan")
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
                return None
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
                    return -2
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
        return vs, ws, h, act, u1raw, u2raw, u1, u2, av, aphi, apsi

    for k in range(nsteps + 1):
        t = k * dt
        if not (isfinite(x) and isfinite(y) and isfinite(psi) and isfinite(phi)
                and isfinite(v) and isfinite(phid) and isfinite(psid)):
            return NONFINITE, k
        res = pipeline(t, x, y, psi, phi, v, phid, psid)
        if res is None:
            return SINGULAR, k
        if res == -2:
            return INFEASIBLE, k
        vs, ws, h, act, u1raw, u2raw, u1, u2, av, aphi, apsi = res
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
        uraw_out[k, 0] = u1raw
        uraw_out[k, 1] = u2raw
        u_out[k, 0] = u1
        u_out[k, 1] = u2
        h_out[k] = h
        e1 = (v - vs) * cp
        e2 = (v - vs) * sp
        e3 = psid - ws
        e4 = phid
        v_out[k] = sqrt(0.5 * (e1 * e1 + e2 * e2 + e3 * e3 + e4 * e4))
        e_out[k, 0] = e1
        e_out[k, 1] = e2
        e_out[k, 2] = e3
        e_out[k, 3] = e4
        act_out[k] = act
        if k == nsteps:
            break
        # RK4 over the 7-dimensional state
        s1 = (v * cp, v * sp, psid, phid, av, aphi, apsi)
        x2 = (x + half * s1[0], y + half * s1[1], psi + half * s1[2],
              phi + half * s1[3], v + half * s1[4], phid + half * s1[5],
              psid + half * s1[6])
        res = pipeline(t + half, *x2)
        if res is None:
            return SINGULAR, k
        if res == -2:
            return INFEASIBLE, k
        s2 = (x2[4] * cos(x2[2]), x2[4] * sin(x2[2]), x2[6], x2[5],
              res[8], res[9], res[10])
        x3 = (x + half * s2[0], y + half * s2[1], psi + half * s2[2],
              phi + half * s2[3], v + half * s2[4], phid + half * s2[5],
              psid + half * s2[6])
        res = pipeline(t + half, *x3)
        if res is None:
            return SINGULAR, k
        if res == -2:
            return INFEASIBLE, k
        s3 = (x3[4] * cos(x3[2]), x3[4] * sin(x3[2]), x3[6], x3[5],
              res[8], res[9], res[10])
        x4 = (x + dt * s3[0], y + dt * s3[1], psi + dt * s3[2],
              phi + dt * s3[3], v + dt * s3[4], phid + dt * s3[5],
              psid + dt * s3[6])
        res = pipeline(t + dt, *x4)
        if res is None:
            return SINGULAR, k
        if res == -2:
            return INFEASIBLE, k
        s4 = (x4[4] * cos(x4[2]), x4[4] * sin(x4[2]), x4[6], x4[5],
              res[8], res[9], res[10])
        x = x + sixth * (s1[0] + 2.0 * s2[0] + 2.0 * s3[0] + s4[0])
        y = y + sixth * (s1[1] + 2.0 * s2[1] + 2.0 * s3[1] + s4[1])
        psi = psi + sixth * (s1[2] + 2.0 * s2[2] + 2.0 * s3[2] + s4[2])
        phi = phi + sixth * (s1[3] + 2.0 * s2[3] + 2.0 * s3[3] + s4[3])
        v = v + sixth * (s1[4] + 2.0 * s2[4] + 2.0 * s3[4] + s4[4])
        phid = phid + sixth * (s1[5] + 2.0 * s2[5] + 2.0 * s3[5] + s4[5])
        psid = psid + sixth * (s1[6] + 2.0 * s2[6] + 2.0 * s3[6] + s4[6])
    return OK, nsteps


def run_arm(x0, nsteps, dt, a1, a2, a3, g1, g2, b1, b2, taumax,
            mu1, mu2, ctrl_kind, k11, k12, k21, k22,
            dist_on, da1, da2, dfreq, dphase,
            t_out, q_out, qd_out, qs_out, uraw_out, u_out,
            h_out, v_out, e_out, act_out):
    """Two-link arm tracking a constant joint-velocity command.

    Controllers: 0 damping, 1 damping + gravity compensation, 2 computed
    torque (the feedforward is C(q, qdot) mu + G since the commanded
    velocity is constant). taumax <= 0 disables input clamping.
    """
    q1 = float(x0[0]); q2 = float(x0[1]); v1 = float(x0[2]); v2 = float(x0[3])
    half = 0.5 * dt
    sixth = dt / 6.0

    def pipeline(t, q1, q2, v1, v2):
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
        return u1raw, u2raw, u1, u2, V, e1, e2, acc1, acc2

    for k in range(nsteps + 1):
        t = k * dt
        if not (isfinite(q1) and isfinite(q2) and isfinite(v1) and isfinite(v2)):
            return NONFINITE, k
        u1raw, u2raw, u1, u2, V, e1, e2, acc1, acc2 = pipeline(t, q1, q2, v1, v2)
        t_out[k] = t
        q_out[k, 0] = q1
        q_out[k, 1] = q2
        qd_out[k, 0] = v1
        qd_out[k, 1] = v2
        qs_out[k, 0] = mu1
        qs_out[k, 1] = mu2
        uraw_out[k, 0] = u1raw
        uraw_out[k, 1] = u2raw
        u_out[k, 0] = u1
        u_out[k, 1] = u2
        h_out[k] = float("nan")
        v_out[k] = V
        e_out[k, 0] = e1
        e_out[k, 1] = e2
        act_out[k] = -1
        if k == nsteps:
            break
        s1 = (v1, v2, acc1, acc2)
        r = pipeline(t + half, q1 + half * s1[0], q2 + half * s1[1],
                     v1 + half * s1[2], v2 + half * s1[3])
        s2 = (v1 + half * s1[2], v2 + half * s1[3], r[7], r[8])
        r = pipeline(t + half, q1 + half * s2[0], q2 + half * s2[1],
                     v1 + half * s2[2], v2 + half * s2[3])
        s3 = (v1 + half * s2[2], v2 + half * s2[3], r[7], r[8])
        r = pipeline(t + dt, q1 + dt * s3[0], q2 + dt * s3[1],
                     v1 + dt * s3[2], v2 + dt * s3[3])
        s4 = (v1 + dt * s3[2], v2 + dt * s3[3], r[7], r[8])
        q1 = q1 + sixth * (s1[0] + 2.0 * s2[0] + 2.0 * s3[0] + s4[0])
        q2 = q2 + sixth * (s1[1] + 2.0 * s2[1] + 2.0 * s3[1] + s4[1])
        v1 = v1 + sixth * (s1[2] + 2.0 * s2[2] + 2.0 * s3[2] + s4[2])
        v2 = v2 + sixth * (s1[3] + 2.0 * s2[3] + 2.0 * s3[3] + s4[3])
    return OK, nsteps
