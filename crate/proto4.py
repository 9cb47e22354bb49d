import numpy as np
from scipy import linalg as la

np.set_printoptions(precision=6, suppress=False, linewidth=200)
rng = np.random.default_rng(3)

def lyap(a, q): return la.solve_lyapunov(a, -q)
def sylv(a, b, c): return la.solve_sylvester(a, b, -c)
def stable(nn):
    M = rng.standard_normal((nn, nn))
    return M - (np.max(la.eigvals(M).real) + 0.6 + rng.uniform(0, 1)) * np.eye(nn)
def orth_qr(M):
    q, _ = np.linalg.qr(M); return q

n, m, p, nv, nw = 7, 2, 2, 2, 2
A = stable(n); B = rng.standard_normal((n, m)); C = rng.standard_normal((p, n)); D = np.zeros((p, m))
Av = stable(nv); Bv = rng.standard_normal((nv, m)); Cv = rng.standard_normal((m, nv))
Dv = rng.standard_normal((m, m)); Dv[:, 0] = 0.0   # singular Dv^T -> nontrivial null space
Aw = stable(nw); Bw = rng.standard_normal((nw, p)); Cw = rng.standard_normal((p, nw)); Dw = rng.standard_normal((p, p))

Pv = lyap(Av, Bv @ Bv.T)
P12 = sylv(A, Av.T, B @ (Cv @ Pv + Dv @ Bv.T))
B1 = np.hstack([B, P12 @ Cv.T, B @ Dv]); B2 = np.hstack([P12 @ Cv.T, B, B @ Dv])
Pe = lyap(A, B1 @ B2.T); Pe = 0.5 * (Pe + Pe.T)
Ai = np.block([[A, B @ Cv], [np.zeros((nv, n)), Av]])
Ci = np.hstack([C, D @ Cv])
BF = np.vstack([P12 @ Cv.T + B @ Dv @ Dv.T, Pv @ Cv.T + Bv @ Dv.T])
Qw = lyap(Aw.T, Cw.T @ Cw)
Q12 = sylv(A.T, Aw, C.T @ (Bw.T @ Qw + Dw.T @ Cw))
C1 = np.vstack([C, Bw.T @ Q12.T, Dw @ C]); C2 = np.vstack([Bw.T @ Q12.T, C, Dw @ C])
Qe = lyap(A.T, C1.T @ C2); Qe = 0.5 * (Qe + Qe.T)

# ---------- NOWI ----------
def nowi(r, tol=1e-6, itmax=100):
    sig = [0.7 + 0.3 * k for k in range(r)]
    rd = [rng.standard_normal(m) for _ in range(r)]
    ld = [rng.standard_normal(p) for _ in range(r)]
    lam_prev = None
    for it in range(itmax):
        Vc = [la.solve(s * np.eye(n + nv) - Ai, BF @ d) for s, d in zip(sig, rd)]
        Wc = [la.solve(s * np.eye(n + nv) - Ai.T, Ci.T @ d) for s, d in zip(sig, ld)]
        Vt = np.column_stack([np.real(v) for v in Vc])[:n, :]
        Wt = np.column_stack([np.real(w) for w in Wc])[:n, :]
        Vr = orth_qr(Vt); Wr = orth_qr(Wt)
        Wr = Wr @ la.inv(Vr.T @ Wr)
        Ar = Wr.T @ A @ Vr; Br = Wr.T @ B; Cr = C @ Vr
        lam, R = la.eig(Ar)
        order = np.argsort(lam.real); lam = lam[order]; R = R[:, order]
        Rinv = la.inv(R)
        # unconjugated transpose-convention residues, shift = -lambda
        sig = [-l for l in lam]
        rd = [(Rinv @ Br)[i, :] for i in range(r)]
        ld = [(Cr @ R)[:, i] for i in range(r)]
        # reflect unstable
        sig = [s if s.real > 0 else -np.conj(s) for s in sig]
        if lam_prev is not None:
            chg = la.norm(np.sort_complex(lam) - np.sort_complex(lam_prev)) / la.norm(lam_prev)
            if chg <= tol:
                break
        lam_prev = lam
    # final Dr via (38C)
    Pt12 = sylv(Ar, Av.T, Br @ (Cv @ Pv + Dv @ Bv.T))
    U, sv, VT = la.svd(Dv.T)
    rank = int(np.sum(sv > 1e-12 * max(sv.max(), 1)))
    M = VT[rank:, :].T
    print("  ||Dv^T M|| =", la.norm(Dv.T @ M))
    mid = M.T @ Cv @ Pv @ Cv.T @ M
    Dr = C @ (P12 - Vr @ Pt12) @ Cv.T @ M @ la.inv(mid) @ M.T
    dev = la.norm(P12 - Vr @ Pt12)
    return Ar, Br, Cr, Dr, it + 1, dev

Ar, Br, Cr, Dr, iters, dev = nowi(2)
print("NOWI converged in", iters, "iters; poles", np.sort_complex(la.eigvals(Ar)))
print("  interp deviation ||P12 - Vr Pt12|| =", dev, " Dr:", Dr.ravel())
# error system (G - Gr)V must be proper: (D - Dr) Dv = -Dr Dv should be ~0
print("  ||(D - Dr) Dv|| =", la.norm((D - Dr) @ Dv))

# ---------- FWBT ----------
def contragradient(P, Q):
    L = la.cholesky(P, lower=True)
    Mm = L.T @ Q @ L
    Mm = 0.5 * (Mm + Mm.T)
    evals, U = la.eigh(Mm)
    idx = np.argsort(evals)[::-1]
    evals = evals[idx]; U = U[:, idx]
    sig = np.sqrt(np.maximum(evals, 0.0))
    T = L @ U @ np.diag(sig ** -0.5)
    return T, sig

T, sbar = contragradient(Pe, Qe)
print("FWBT check: T^-1 Pe T^-T diag err:",
      np.abs(la.inv(T) @ Pe @ la.inv(T).T - np.diag(sbar)).max(),
      " T^T Qe T err:", np.abs(T.T @ Qe @ T - np.diag(sbar)).max())
r = 3
Vr_ = T[:, :r]; Wr_ = la.inv(T).T[:, :r]
Arb = Wr_.T @ A @ Vr_; Brb = Wr_.T @ B; Crb = C @ Vr_
print("FWBT rom stable:", np.max(la.eigvals(Arb).real) < 0, " sigma_bar:", sbar)

# approx fwbt via factors of exact Pe, Qe (Cholesky) must match fwbt ROM transfer fn
Fp = la.cholesky(Pe, lower=True); Fq = la.cholesky(Qe, lower=True)
U2, s2, V2T = la.svd(Fq.T @ Fp)
S2h = np.diag(s2[:r] ** -0.5)
Vr2 = Fp @ V2T.T[:, :r] @ S2h; Wr2 = Fq @ U2[:, :r] @ S2h
Ar2 = Wr2.T @ A @ Vr2; Br2 = Wr2.T @ B; Cr2 = C @ Vr2
print("biorth check:", np.abs(Wr2.T @ Vr2 - np.eye(r)).max())
for s in [0.3j, 1 + 2j, 10.0 + 0j]:
    g1 = Crb @ la.solve(s * np.eye(r) - Arb, Brb)
    g2 = Cr2 @ la.solve(s * np.eye(r) - Ar2, Br2)
    print(f"  s={s}: |G_fwbt - G_afwbt| = {np.abs(g1 - g2).max():.3e}")

# hankel-like sigma from PQ eigs
print("sqrt eig(PeQe):", np.sort(np.sqrt(np.abs(la.eigvals(Pe @ Qe).real)))[::-1])
EOF