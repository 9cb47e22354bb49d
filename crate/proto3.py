import numpy as np
from scipy import linalg as la

np.set_printoptions(precision=6, suppress=False, linewidth=200)
rng = np.random.default_rng(7)

def lyap(a, q):
    return la.solve_lyapunov(a, -q)

def sylv(a, b, c):
    return la.solve_sylvester(a, b, -c)

def stable(nn, scale=1.0):
    M = rng.standard_normal((nn, nn)) * scale
    ab = np.max(la.eigvals(M).real)
    return M - (ab + 0.5 + rng.uniform(0.2, 1.0)) * np.eye(nn)

def orth_qr(M):
    q, _ = np.linalg.qr(M)
    return q

# random test system: n=6 plant (m=2 in, p=2 out), weight order 2
n, m, p, nv = 6, 2, 2, 2
A = stable(n); B = rng.standard_normal((n, m)); C = rng.standard_normal((p, n)); D = np.zeros((p, m))
Av = stable(nv); Bv = rng.standard_normal((nv, m)); Cv = rng.standard_normal((m, nv)); Dv = rng.standard_normal((m, m))

Pv = lyap(Av, Bv @ Bv.T)
P12 = sylv(A, Av.T, B @ (Cv @ Pv + Dv @ Bv.T))
B1 = np.hstack([B, P12 @ Cv.T, B @ Dv])
B2 = np.hstack([P12 @ Cv.T, B, B @ Dv])
Pe = lyap(A, B1 @ B2.T); Pe = 0.5 * (Pe + Pe.T)
Ai = np.block([[A, B @ Cv], [np.zeros((nv, n)), Av]])
Bi = np.vstack([B @ Dv, Bv])
Ci = np.hstack([C, D @ Cv])
BF = np.vstack([P12 @ Cv.T + B @ Dv @ Dv.T, Pv @ Cv.T + Bv @ Dv.T])

def realify(cols):
    out = []
    for sig, x in cols:
        if abs(sig.imag) < 1e-14:
            out.append(np.real(x))
        else:
            out.append(np.real(x)); out.append(np.imag(x))
    return np.column_stack(out)

def ipowi(shifts_dirs):
    # shifts_dirs: list of (sigma, rdir) with only one member of each conjugate pair, sorted
    cols = [(s, la.solve(s * np.eye(n + nv) - Ai, BF @ r)) for s, r in shifts_dirs]
    Va = orth_qr(realify(cols))
    Wa = Va @ la.inv(Va.T @ Va)
    Ahat = Wa.T @ Ai @ Va
    Bhat = Wa.T @ BF
    Bperp = BF - Va @ Bhat
    Li = la.inv(Bperp.T @ Bperp) @ Bperp.T @ (Ai @ Va - Va @ Ahat)
    S = Ahat - Bhat @ Li
    Vr, Vb = Va[:n, :], Va[n:, :]
    Li1 = np.hstack([-Li.T, Vb.T @ Cv.T, -Li.T @ Dv])
    Li2 = np.hstack([Vb.T @ Cv.T, -Li.T, -Li.T @ Dv])
    Ps = lyap(-S.T, Li1 @ Li2.T); Ps = 0.5 * (Ps + Ps.T)
    Psi = la.inv(Ps)
    return -Psi @ S.T @ Ps, -Psi @ Li.T, C @ Vr, Vr, Vb, S, Ps, Li

# --- Theorem 1 with a conjugate pair + one real shift (r=3) ---
sd = [(1.5 + 0j, rng.standard_normal(m)), (0.8 + 2.0j, rng.standard_normal(m) + 1j * rng.standard_normal(m))]
Ar, Br, Cr, Vr, Vb, S, Ps, Li = ipowi(sd)
lam = np.sort_complex(la.eigvals(Ar))
print("ROM poles:", lam, " expected ~ [-1.5, -0.8±2i]")
print("S eigs:", np.sort_complex(la.eigvals(S)))
Pt12 = sylv(Ar, Av.T, Br @ (Cv @ Pv + Dv @ Bv.T))
Bt2 = np.hstack([Pt12 @ Cv.T, Br, Br @ Dv])
PeR = lyap(Ar, np.hstack([Br, Pt12 @ Cv.T, Br @ Dv]) @ Bt2.T)
Ph12 = sylv(A, Ar.T, B1 @ Bt2.T)
r51 = la.norm(Cr @ PeR - C @ Ph12) / la.norm(C @ Ph12)
print("(51C) rel residual:", r51)
print("P_e^rom vs inv(Ps):", np.abs(PeR - la.inv(Ps)).max())

# --- interpolation condition (35C) at ROM poles ---
Ait = np.block([[Ar, Br @ Cv], [np.zeros((nv, Ar.shape[0])), Av]])
Cit = np.hstack([Cr, D @ Cv])
BFt = np.vstack([Pt12 @ Cv.T + Br @ Dv @ Dv.T, Pv @ Cv.T + Bv @ Dv.T])
lamr, R = la.eig(Ar)
Rinv = la.inv(R)
for i in range(len(lamr)):
    b = (Rinv @ Br)[i, :]
    s0 = -lamr[i]
    F = Ci @ la.solve(s0 * np.eye(n + nv) - Ai, BF @ b)
    Ft = Cit @ la.solve(s0 * np.eye(Ar.shape[0] + nv) - Ait, BFt @ b)
    print(f"(35C) pole {lamr[i]:.4f}: rel {la.norm(F - Ft) / la.norm(F):.3e}")

# --- Pythagoras and monotonic decay (nested shifts), D=0 ---
def h2sq(Asys, Bsys, Csys):
    P = lyap(Asys, Bsys @ Bsys.T)
    return np.trace(Csys @ P @ Csys.T)

def series_GV(Ag, Bg, Cg, Dg):
    # (G)*(V): input augmented
    na = Ag.shape[0]
    Aa = np.block([[Ag, Bg @ Cv], [np.zeros((nv, na)), Av]])
    Ba = np.vstack([Bg @ Dv, Bv])
    Ca = np.hstack([Cg, Dg @ Cv])
    return Aa, Ba, Ca

def werr(Ar_, Br_, Cr_):
    nr = Ar_.shape[0]
    Ae = np.block([[A, np.zeros((n, nr))], [np.zeros((nr, n)), Ar_]])
    Be = np.vstack([B, Br_]); Ce = np.hstack([C, -Cr_])
    Aa, Ba, Ca = series_GV(Ae, Be, Ce, np.zeros((p, m)))
    return np.sqrt(h2sq(Aa, Ba, Ca))

s6 = [(1.5 + 0j, rng.standard_normal(m)), (0.8 + 2.0j, rng.standard_normal(m) + 1j * rng.standard_normal(m)),
      (3.0 + 0j, rng.standard_normal(m)), (2.0 + 1.0j, rng.standard_normal(m) + 1j * rng.standard_normal(m))]
errs = []
for k in [1, 2, 4]:
    Ar_, Br_, Cr_, *_ = ipowi(s6[:k])
    errs.append(werr(Ar_, Br_, Cr_))
print("nested errors (should be non-increasing):", errs)

Ar_, Br_, Cr_, *_ = ipowi(s6[:2])
Aa, Ba, Ca = series_GV(A, B, C, D)
Aar, Bar, Car = series_GV(Ar_, Br_, Cr_, D)
lhs = werr(Ar_, Br_, Cr_) ** 2
rhs = h2sq(Aa, Ba, Ca) - h2sq(Aar, Bar, Car)
print("Pythagoras:", lhs, rhs, "rel", abs(lhs - rhs) / abs(rhs))

# trace expansion identity
Pt12_ = sylv(Ar_, Av.T, Br_ @ (Cv @ Pv + Dv @ Bv.T))
Bt2_ = np.hstack([Pt12_ @ Cv.T, Br_, Br_ @ Dv])
PeR_ = lyap(Ar_, np.hstack([Br_, Pt12_ @ Cv.T, Br_ @ Dv]) @ Bt2_.T)
Ph12_ = sylv(A, Ar_.T, B1 @ Bt2_.T)
tre = np.trace(C @ Pe @ C.T) - 2 * np.trace(C @ Ph12_ @ Cr_.T) + np.trace(Cr_ @ PeR_ @ Cr_.T)
print("trace expansion vs h2err^2:", tre, lhs, "rel", abs(tre - lhs) / abs(lhs))

# --- Halevi residuals on full-order copy Gr = G ---
Q_rom = lyap(A.T, C.T @ C)  # ROM observability gramian (Gr = G)
Xh = sylv(Ai, A.T, BF @ B.T)
rhs_y = -np.vstack([C.T, ((D - D) @ Cv).T]) @ C + np.vstack([np.zeros((n, m)), Cv.T]) @ B.T @ Q_rom
Yh = sylv(Ai.T, A, rhs_y)
Pt12g = sylv(A, Av.T, B @ (Cv @ Pv + Dv @ Bv.T))
Bt2g = np.hstack([Pt12g @ Cv.T, B, B @ Dv])
PeRg = lyap(A, np.hstack([B, Pt12g @ Cv.T, B @ Dv]) @ Bt2g.T)
r42 = Ci @ Xh - C @ PeRg - D @ np.hstack([np.zeros((m, n)), Cv]) @ Xh
r43 = Yh.T @ BF + Q_rom @ (B @ Dv @ Dv.T + Xh.T @ np.vstack([np.zeros((n, m)), Cv.T]))
r8 = Yh.T @ Xh + Q_rom @ PeRg
# M = null(Dv^T): Dv random square → nonsingular, M empty; make a singular Dv test separately
print("Halevi (42C):", la.norm(r42), "(43):", la.norm(r43), "(eq8):", la.norm(r8))

# --- null-space D̃_r path with singular Dv ---
Dv_s = Dv.copy(); Dv_s[:, 0] = 0.0  # column zero → Dv^T has null space
U, sv, Vt = la.svd(Dv_s.T)
M = Vt.T[:, sv < 1e-10 * max(sv)] if False else U[:, np.sum(sv > 1e-10 * max(sv)):]
print("null check ||Dv_s^T M||:", la.norm(Dv_s.T @ M), "M shape:", M.shape)