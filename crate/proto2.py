import numpy as np
from scipy import linalg as la

np.set_printoptions(precision=6, suppress=False, linewidth=160)

A = np.array([[-0.4727, 0.1422, -2.9044],
              [0.3754, -0.9764, -1.1972],
              [2.8836, 1.2466, -0.3644]])
B = np.array([[0.0, 0.0, 0.7916],
              [0.0, 1.5677, -0.0930],
              [-2.7018, 0.0, -0.3802]])
C = np.array([[0.6959, -0.2684, -0.5393],
              [0.0, 1.4370, -0.4301]])
D = np.array([[0.0, 0.0, -2.4207],
              [-0.9021, -1.6833, 0.0]])

Av = np.array([[-0.9452, 0.0546], [0.0546, -1.0319]])
Bv = np.array([[0.3656, 0.0, 0.5451], [-0.8849, -2.6384, 1.0780]])
Cv = np.array([[0.0, -1.3113], [2.3793, -0.1457], [-0.6410, 0.1058]])
Dv = np.array([[0.0, 0.0, 0.7236], [0.0, -0.5867, 0.0], [-0.7636, 0.0, 0.0]])

Aw = np.array([[-1.6503, 1.6670], [1.6670, -2.0860]])
Bw = np.array([[0.1897, -0.4772], [-0.4555, -0.2561]])
Cw = np.array([[0.7987, 2.0373], [0.0, -0.3397]])
Dw = np.array([[0.0, 0.2353], [0.5445, 0.0]])

n, m = B.shape
p = C.shape[0]
nv = Av.shape[0]
nw = Aw.shape[0]

def lyap(a, q):
    return la.solve_lyapunov(a, -q)

def sylv(a, b, c):
    return la.solve_sylvester(a, b, -c)

# input side
Pv = lyap(Av, Bv @ Bv.T)
P12 = sylv(A, Av.T, B @ (Cv @ Pv + Dv @ Bv.T))
B1 = np.hstack([B, P12 @ Cv.T, B @ Dv])
Ai = np.block([[A, B @ Cv], [np.zeros((nv, n)), Av]])
BF = np.vstack([P12 @ Cv.T + B @ Dv @ Dv.T, Pv @ Cv.T + Bv @ Dv.T])
Pe = lyap(A, B1 @ np.hstack([P12 @ Cv.T, B, B @ Dv]).T)

# output side
Qw = lyap(Aw.T, Cw.T @ Cw)
Q12 = sylv(A.T, Aw, C.T @ (Bw.T @ Qw + Dw.T @ Cw))
C1 = np.vstack([C, Bw.T @ Q12.T, Dw @ C])     # C1^T = [C^T, Q12 Bw, C^T Dw^T]
C2 = np.vstack([Bw.T @ Q12.T, C, Dw @ C])
Qe = lyap(A.T, C1.T @ C2)
Ao = np.block([[A, np.zeros((n, nw))], [Bw @ C, Aw]])
Bo = np.vstack([B, Bw @ D])
CG = np.hstack([Bw.T @ Q12.T + Dw.T @ Dw @ C, Bw.T @ Qw + Dw.T @ Cw])

def ipowi_rom(Va):
    Wa = Va @ la.inv(Va.T @ Va)
    Ahat = Wa.T @ Ai @ Va
    Bhat = Wa.T @ BF
    Bperp = BF - Va @ Bhat
    Li = la.inv(Bperp.T @ Bperp) @ Bperp.T @ (Ai @ Va - Va @ Ahat)
    S = Ahat - Bhat @ Li
    Vr, Vb = Va[:n, :], Va[n:, :]
    Li1 = np.hstack([-Li.T, Vb.T @ Cv.T, -Li.T @ Dv])
    Li2 = np.hstack([Vb.T @ Cv.T, -Li.T, -Li.T @ Dv])
    Ps = lyap(-S.T, Li1 @ Li2.T)
    Ps = 0.5 * (Ps + Ps.T)
    Psi = la.inv(Ps)
    Ar = -Psi @ S.T @ Ps
    Br = -Psi @ Li.T
    Cr = C @ Vr
    return Ar, Br, Cr, Vr, Vb, S, Li, Ps

def opowi_rom(Wa):
    Vo = Wa
    Wo = Vo @ la.inv(Vo.T @ Vo)
    Ahat = Wo.T @ Ao @ Vo
    Chat = CG @ Vo
    Cperp = CG - Chat @ Wo.T
    Lo = (Wo.T @ Ao - Ahat @ Wo.T) @ Cperp.T @ la.inv(Cperp @ Cperp.T)
    S = Ahat - Lo @ Chat
    Wr, Wb = Wa[:n, :], Wa[n:, :]
    Lo1T = np.hstack([-Lo, Wb.T @ Bw, -Lo @ Dw.T])   # r x 3p
    Lo2T = np.hstack([Wb.T @ Bw, -Lo, -Lo @ Dw.T])
    # -S Qs - Qs S^T + Lo1^T Lo2 = 0  -> lyap with a = -S
    Qs = lyap(-S, Lo1T @ Lo2T.T)
    Qs = 0.5 * (Qs + Qs.T)
    Qsi = la.inv(Qs)
    Ar = -Qs @ S.T @ Qsi
    Br = Wr.T @ B
    Cr = -Lo.T @ Qsi
    return Ar, Br, Cr, Wr, Wb, S, Lo, Qs

# ---- I-POWI golden with (A - sigma I) convention ----
x = la.solve(Ai - 1.0 * np.eye(n + nv), BF @ np.array([1.0, 1.0, 1.0]))
Va = (x / la.norm(x)).reshape(-1, 1)
Ar, Br, Cr, Vr, Vb, S, Li, Ps = ipowi_rom(Va)
print("I-POWI: Ar", Ar.ravel(), "Br", Br.ravel(), "Cr", Cr.ravel())

# optimality: Cr*Pe_rom vs C*Phat12
Pt12 = sylv(Ar, Av.T, Br @ (Cv @ Pv + Dv @ Bv.T))
Bt1 = np.hstack([Br, Pt12 @ Cv.T, Br @ Dv])
Bt2 = np.hstack([Pt12 @ Cv.T, Br, Br @ Dv])
PeR = lyap(Ar, Bt1 @ Bt2.T)
Ph12 = sylv(A, Ar.T, B1 @ Bt2.T)
print("Cr PeR:", (Cr @ PeR).ravel(), " C Ph12:", (C @ Ph12).ravel())
print("Theorem1: PeR vs inv(Ps):", np.abs(PeR - la.inv(Ps)).max(), " Pt12 vs Psi Vb^T:", np.abs(Pt12 - la.inv(Ps) @ Vb.T).max())

# ---- O-POWI golden ----
y = la.solve(Ao.T - 1.0 * np.eye(n + nw), CG.T @ np.array([1.0, 1.0]))
Wa = (y / la.norm(y)).reshape(-1, 1)
Ar_o, Br_o, Cr_o, Wr, Wb, S_o, Lo, Qs = opowi_rom(Wa)
print("O-POWI: Ar", Ar_o.ravel(), "Br", Br_o.ravel(), "Cr", Cr_o.ravel())
Qt12 = sylv(Ar_o.T, Aw, Cr_o.T @ (Bw.T @ Qw + Dw.T @ Cw))
Ct1 = np.vstack([Cr_o, Bw.T @ Qt12.T, Dw @ Cr_o])
Ct2 = np.vstack([Bw.T @ Qt12.T, Cr_o, Dw @ Cr_o])
QeR = lyap(Ar_o.T, Ct1.T @ Ct2)
Qh12 = sylv(A.T, Ar_o, C1.T @ Ct2)
print("QeR Br:", (QeR @ Br_o).ravel(), " Qh12^T B:", (Qh12.T @ B).ravel())

# ---- D-POWI from sigma=1, rdir ones, ldir ones ----
def dpowi(sig0, rd0, ld0, tol=1e-6, itmax=100):
    sig, rd, ld = [sig0], [rd0], [ld0]
    lam_prev = None
    hist = []
    for it in range(itmax):
        Vcols = [la.solve(Ai - s * np.eye(n + nv), BF @ r) for s, r in zip(sig, rd)]
        Wcols = [la.solve(Ao.T - s * np.eye(n + nw), CG.T @ l) for s, l in zip(sig, ld)]
        Vt = np.column_stack([np.real(v) for v in Vcols])[:n, :]
        Wt = np.column_stack([np.real(w) for w in Wcols])[:n, :]
        Vr = la.orth(Vt)
        Wr = la.orth(Wt)
        Wr = Wr @ la.inv(Vr.T @ Wr)
        Ar = Wr.T @ A @ Vr
        Br = Wr.T @ B
        Cr = C @ Vr
        lam, R = la.eig(Ar)
        order = np.argsort(lam.real)
        lam = lam[order]; R = R[:, order]
        sig = [-l for l in lam]
        Rinv = la.inv(R)
        rd = [np.conj((Rinv @ Br)[i, :]) for i in range(len(lam))]   # B̃_r^* R^{-*} columns
        ld = [np.conj((Cr @ R)[:, i]) for i in range(len(lam))]
        # residuals
        Pt12 = sylv(Ar, Av.T, Br @ (Cv @ Pv + Dv @ Bv.T))
        Bt2 = np.hstack([Pt12 @ Cv.T, Br, Br @ Dv])
        PeR = lyap(Ar, np.hstack([Br, Pt12 @ Cv.T, Br @ Dv]) @ Bt2.T)
        Ph12 = sylv(A, Ar.T, B1 @ Bt2.T)
        res_in = C @ Ph12 - Cr @ PeR
        Qt12 = sylv(Ar.T, Aw, Cr.T @ (Bw.T @ Qw + Dw.T @ Cw))
        Ct2 = np.vstack([Bw.T @ Qt12.T, Cr, Dw @ Cr])
        QeR = lyap(Ar.T, np.vstack([Cr, Bw.T @ Qt12.T, Dw @ Cr]).T @ Ct2)
        Qh12 = sylv(A.T, Ar, C1.T @ Ct2)
        res_out = Qh12.T @ B - QeR @ Br
        hist.append((lam.copy(), la.norm(res_in), la.norm(res_out)))
        if lam_prev is not None:
            chg = la.norm(np.sort_complex(lam) - np.sort_complex(lam_prev)) / la.norm(lam_prev)
            if chg <= tol:
                break
        lam_prev = lam
    return Ar, Br, Cr, res_in, res_out, hist

Ar_d, Br_d, Cr_d, res_in, res_out, hist = dpowi(1.0, np.ones(3), np.ones(2))
print("D-POWI: Ar", Ar_d.ravel(), "Br", Br_d.ravel(), "Cr", Cr_d.ravel())
print("res_in", res_in.ravel(), "res_out", res_out.ravel())
print("iters:", len(hist), "residual norms last 4:", [(f"{a:.6f}", f"{b:.6f}") for _, a, b in hist[-4:]])
