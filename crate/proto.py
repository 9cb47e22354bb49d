import numpy as np
from scipy import linalg as la

np.set_printoptions(precision=6, suppress=False, linewidth=160)

# §5 illustrative example matrices
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

Av = np.array([[-0.9452, 0.0546],
               [0.0546, -1.0319]])
Bv = np.array([[0.3656, 0.0, 0.5451],
               [-0.8849, -2.6384, 1.0780]])
Cv = np.array([[0.0, -1.3113],
               [2.3793, -0.1457],
               [-0.6410, 0.1058]])
Dv = np.array([[0.0, 0.0, 0.7236],
               [0.0, -0.5867, 0.0],
               [-0.7636, 0.0, 0.0]])

Aw = np.array([[-1.6503, 1.6670],
               [1.6670, -2.0860]])
Bw = np.array([[0.1897, -0.4772],
               [-0.4555, -0.2561]])
Cw = np.array([[0.7987, 2.0373],
               [0.0, -0.3397]])
Dw = np.array([[0.0, 0.2353],
               [0.5445, 0.0]])

n, m = B.shape
p = C.shape[0]
nv = Av.shape[0]
nw = Aw.shape[0]

def lyap(a, q):
    # solves a x + x a^T + q = 0
    return la.solve_lyapunov(a, -q)

def sylv(a, b, c):
    # solves a x + x b + c = 0
    return la.solve_sylvester(a, b, -c)

# ---------------- input-side data ----------------
Pv = lyap(Av, Bv @ Bv.T)
P12 = sylv(A, Av.T, B @ (Cv @ Pv + Dv @ Bv.T))
B1 = np.hstack([B, P12 @ Cv.T, B @ Dv])
B2 = np.hstack([P12 @ Cv.T, B, B @ Dv])
Pe = lyap(A, B1 @ B2.T)
Ai = np.block([[A, B @ Cv], [np.zeros((nv, n)), Av]])
Bi = np.vstack([B @ Dv, Bv])
Ci = np.hstack([C, D @ Cv])
BF = np.vstack([P12 @ Cv.T + B @ Dv @ Dv.T, Pv @ Cv.T + Bv @ Dv.T])

# check Pe versus augmented gramian
Pi = lyap(Ai, Bi @ Bi.T)
print("block check Pe:", np.abs(Pi[:n, :n] - Pe).max(), " P12:", np.abs(Pi[:n, n:] - P12).max())

# ---------------- I-POWI, sigma=1, rdir=[1,1,1] ----------------
sigma = 1.0
rdir = np.array([1.0, 1.0, 1.0])

def ipowi(Va):
    # Given basis Va (na x r), compute the parameterized ROM
    Wa = Va @ la.inv(Va.T @ Va)
    Ahat = Wa.T @ Ai @ Va
    Bhat = Wa.T @ BF
    Bperp = BF - Va @ Bhat
    Li = la.inv(Bperp.T @ Bperp) @ Bperp.T @ (Ai @ Va - Va @ Ahat)
    S = Ahat - Bhat @ Li
    Vr = Va[:n, :]
    Vb = Va[n:, :]
    Li1 = np.hstack([-Li.T, Vb.T @ Cv.T, -Li.T @ Dv])
    Li2 = np.hstack([Vb.T @ Cv.T, -Li.T, -Li.T @ Dv])
    # -S^T Ps - Ps S + Li1 Li2^T = 0  => (-S^T) Ps + Ps (-S) + Li1 Li2^T = 0
    Ps = lyap(-S.T, Li1 @ Li2.T)  # careful: lyap solves aX+Xa^T+q=0; here a=-S^T gives -S^T Ps - Ps S + q = 0 ✓
    Ps = 0.5 * (Ps + Ps.T)
    Ar = -la.inv(Ps) @ S.T @ Ps
    Br = -la.inv(Ps) @ Li.T
    Cr = C @ Vr
    return Ar, Br, Cr, S, Ps, Vr, Vb, Li

x = la.solve(sigma * np.eye(n + nv) - Ai, BF @ rdir).reshape(-1, 1)
print("raw x:", x.ravel())
for name, Va in [("raw", x), ("normalized", x / la.norm(x)), ("neg-normalized", -x / la.norm(x))]:
    Ar, Br, Cr, S, Ps, Vr, Vb, Li = ipowi(Va)
    print(f"[{name}] Ar={Ar.ravel()}, Br={Br.ravel()}, Cr={Cr.ravel()}, S={S.ravel()}")

# target: Br = [-1.2839, -1.2839, -1.2839], Cr = [-0.3481, -0.6602]
