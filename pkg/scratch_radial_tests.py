"""Discovery run for test_radial_lab constants."""
import math
import time

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigvalsh_tridiagonal
import scipy.sparse as sparse
from scipy.sparse.linalg import spsolve
from scipy.special import iv, kv

from conelab.cone_model import ConeGeometry, mode_table, sphere_volume
from conelab import radial_lab as rl

t0 = time.time()


def stamp(msg):
    print("[%6.2fs] %s" % (time.time() - t0, msg))


# ---------------------------------------------------------------- 1. nodes/spectrum
p51 = rl.planted_problem(5, 1)
geom5 = p51.geom
modes5 = mode_table(geom5, 2)
for j in (0, 1, 2):
    op = rl.reduce(p51, modes5[j], 0.0)
    print("mode", j, "nu", modes5[j].nu, "nodes", rl.node_count(op))

stamp("node counts")
spec0 = rl.negative_spectrum(p51, modes5[0])
print("mode0 spectrum:", [(E, norm) for E, _, norm in spec0])
stamp("negative_spectrum")

# FD cross-check of the mode-0 eigenvalues
op0 = rl.reduce(p51, modes5[0], 0.0)


def fd_neg_eigs(n_pts, r_max_fd=140.0):
    rs_g = np.linspace(0.0, r_max_fd, n_pts)[1:-1]
    h = rs_g[1] - rs_g[0]
    q = np.array(
        [(op0.nu**2 - 0.25) / r**2 + op0.potential(float(r)) for r in rs_g]
    )
    d = 2.0 / h**2 + q
    e = -np.ones(len(rs_g) - 1) / h**2
    return eigvalsh_tridiagonal(d, e, select="v", select_range=(-1e6, -1e-12))


eig_c = fd_neg_eigs(28001)
eig_f = fd_neg_eigs(56001)
eig_rich = (4.0 * eig_f - eig_c) / 3.0
print("FD coarse:", eig_c, "fine:", eig_f, "rich:", eig_rich)
print("lab:", [E for E, _, _ in spec0])
if len(eig_rich) == len(spec0):
    for (E, _, _), Ef in zip(spec0, sorted(eig_rich)):
        print("  rel diff", abs(E - Ef) / abs(E))
stamp("FD eigen cross-check")

# ---------------------------------------------------------------- 2. FD Green oracle
k = 0.7
for j in (1, 2):
    op = rl.reduce(p51, modes5[j], k)
    t_lo, t_hi = math.log(1e-3), math.log(1e3)

    def g_src(r):
        return math.exp(-math.log(r) ** 2)

    def fd_solve(n_pts):
        ts = np.linspace(t_lo, t_hi, n_pts)
        h = ts[1] - ts[0]
        rs = np.exp(ts)
        q = np.array([op.q_log(float(t)) for t in ts])
        rhs = rs**1.5 * np.array([g_src(float(r)) for r in rs])
        npts_i = n_pts - 2
        main = 2.0 / h**2 + q[1:-1]
        off = -np.ones(npts_i - 1) / h**2
        A = sparse.diags([off, main, off], [-1, 0, 1], format="csc")
        v = spsolve(A, rhs[1:-1])
        u = np.zeros(n_pts)
        u[1:-1] = np.sqrt(rs[1:-1]) * v
        return ts, u

    n_c = 6001
    ts_c, u_c = fd_solve(n_c)
    ts_f, u_f = fd_solve(2 * n_c - 1)
    u_rich = (4.0 * u_f[::2] - u_c) / 3.0
    solver = rl.GreenSolver(op, k, r_eval_max=500.0)
    h_c = ts_c[1] - ts_c[0]
    for r_t in (0.3, 1.0, 3.0):
        i = int(round((math.log(r_t) - t_lo) / h_c))
        r0 = math.exp(ts_c[i])
        f = lambda rp: solver.green(r0, rp) * g_src(rp)
        i1, _ = quad(f, 1e-3, r0, limit=400, epsabs=1e-14, epsrel=1e-12)
        i2, _ = quad(f, r0, 450.0, limit=400, epsabs=1e-14, epsrel=1e-12)
        ref = i1 + i2
        print(
            "j=%d r=%.4f  fd=%.10e ref=%.10e rel=%.2e"
            % (j, r0, u_rich[i], ref, abs(u_rich[i] - ref) / abs(ref))
        )
stamp("FD green oracle")

# ---------------------------------------------------------------- 3. (5,0) theta
p50 = rl.planted_problem(5, 0, symmetric=True)
rep50 = rl.detect_kernel(p50, j_max=1)
km = rep50.kernel_modes[0]
c_g = km.coeff_at_inf
print("c_g =", c_g, "vs 4/sqrt(3pi) =", 4.0 / math.sqrt(3.0 * math.pi))
op50 = rl.reduce(p50, mode_table(geom5 := p50.geom, 0)[0], 0.0)
psi_fn = lambda r: km.profile.u(r) * km.norm_constant
sol_theta = rl.solve_source(op50, psi_fn, behavior_window=(1.8, 2.1))
print("pairing:", sol_theta.obstruction_pairing)
print("fit inf:", sol_theta.fit_at_inf.exponent, sol_theta.fit_at_inf.coefficient)
print("residual:", sol_theta.residual)
a1 = sol_theta.u(1000.0) / 1000.0**2
a2 = sol_theta.u(2000.0) / 2000.0**2
a_rich = 2.0 * a2 - a1
target = -1.0 / (3.0 * c_g)
cf = 4.0 / math.sqrt(3.0 * math.pi)
print("theta/r^2 richardson:", a_rich, "target(meas c_g):", target,
      "target(closed form):", -1.0 / (3.0 * cf))
print("rel vs closed form:", abs(a_rich + 1.0 / (3.0 * cf)) * 3.0 * cf)
stamp("theta solve")

# ---------------------------------------------------------------- 4. manufactured free
op_free = rl.reduce(rl.free_problem(5), mode_table(ConeGeometry(n=5), 0)[0], 0.0)
g_man = lambda r: r * (4.0 - r) * math.exp(-r)
sol_man = rl.solve_source(op_free, g_man, behavior_window=(1.8, -0.5))
mask = (sol_man.r_grid > 0.05) & (sol_man.r_grid < 15.0)
u_ex = sol_man.r_grid**2 * np.exp(-sol_man.r_grid)
err = np.max(np.abs(sol_man.u_values - u_ex)[mask]) / np.max(np.abs(u_ex))
print("manufactured sup rel err:", err, "residual:", sol_man.residual)
stamp("manufactured")

# ---------------------------------------------------------------- 5. kernel clean solve
op51 = rl.reduce(p51, modes5[1], 0.0)
rep51 = rl.detect_kernel(p51, j_max=2)
km51 = [m for m in rep51.kernel_modes if m.mode.j == 1][0]
print("(5,1) m =", rep51.m, "m' =", rep51.m_prime, "modes:",
      [mm.mode.j for mm in rep51.kernel_modes])


def w_prof(r):
    return math.exp(-math.log(r) ** 2)


def g_clean(r):
    t = math.log(r)
    nu = op51.nu
    q = nu * nu + r * r * op51.potential(r)
    return r**-1.5 * (-((2.0 * t + 0.5) ** 2) + 2.0 + q) * math.exp(-t * t - 0.5 * t)


sol_cl = rl.solve_source(op51, g_clean, behavior_window=(2.8, -1.8))
print("clean pairing:", sol_cl.obstruction_pairing, "resid:", sol_cl.residual)
rs_chk = np.geomspace(0.1, 10.0, 17)
ratios = [
    (sol_cl.u(float(r)) - w_prof(float(r))) / (km51.profile.u(float(r)) * km51.norm_constant)
    for r in rs_chk
]
print("kernel-admixture ratio spread:", max(ratios) - min(ratios), "mean", np.mean(ratios))
stamp("kernel clean solve")

# ---------------------------------------------------------------- 6. fp norms
c4 = 1.0 / math.sqrt(sphere_volume(4))
fp4 = rl.finite_part_norm(lambda r: c4 / (1.0 + r * r), n=4)
print("fp4:", fp4, "expect -0.5")
s = math.e
fps = rl.finite_part_norm(lambda r: c4 / (s * s + r * r), n=4)
print("fp4 scaled e:", fps, "expect", -0.5 - 1.0)
try:
    rl.finite_part_norm(lambda r: 2.0 * c4 / (1.0 + r * r), n=4)
    print("mis-normalized NOT raised")
except Exception as exc:
    print("mis-normalized raised:", type(exc).__name__, getattr(exc, "achieved", None))
c3 = 1.0 / math.sqrt(sphere_volume(3))
fp3 = rl.finite_part_norm(lambda r: c3 * (1.0 + r * r) ** -0.75, n=3)
print("fp3:", fp3, "expect", math.log(2.0) - 1.0)
sq = rl.finite_part_norm(lambda r: math.exp(-r * r / 2.0), n=4)
print("sq:", sq, "expect", math.pi**2)
stamp("fp norms")

# ---------------------------------------------------------------- 7. boundary pairing
op3 = rl.reduce(rl.free_problem(3), mode_table(ConeGeometry(n=3), 0)[0], 0.0)
reg3, dec3 = rl.zero_solutions(op3)
print("pairing free n3:", rl.boundary_pairing(reg3, dec3), "expect -1")
op5_0 = rl.reduce(rl.free_problem(5), mode_table(ConeGeometry(n=5), 0)[0], 0.0)
op5_1 = rl.reduce(rl.free_problem(5), mode_table(ConeGeometry(n=5), 1)[1], 0.0)
r50, _ = rl.zero_solutions(op5_0)
r51, _ = rl.zero_solutions(op5_1)
try:
    rl.boundary_pairing(r50, r51)
    print("divergence NOT raised")
except Exception as exc:
    print("divergence raised:", type(exc).__name__, exc)
stamp("boundary pairing")

# ---------------------------------------------------------------- 8. ambiguity loop
base = p51
seen = None
for eps in np.geomspace(1e-7, 1e-3, 13):
    Veps = (lambda e: (lambda r: (1.0 + e) * base.potential(r)))(float(eps))
    prob = rl.RadialProblem(
        n=5, potential=Veps, geom=base.geom, decay_l=4.0,
        decay_C=base.decay_C * 1.01, decay_r0=1.0,
    )
    try:
        rep = rl.detect_kernel(prob, j_max=1)
        state = "kernel" if rep.kernel_modes else "clear"
    except Exception as exc:
        state = type(exc).__name__
        if state == "AmbiguityError":
            seen = eps
            print("ambiguity at eps =", eps)
            break
    print("eps %.2e -> %s" % (eps, state))
print("ambiguity seen:", seen)
stamp("ambiguity loop")

# ---------------------------------------------------------------- 9. spectral error
E0 = spec0[0][0]
k_bad = math.sqrt(-E0)
op_bad = rl.RadialOperator(
    nu=modes5[0].nu, k2=k_bad * k_bad, potential=p51.potential,
    mode=modes5[0], n=5, decay_l=4.0,
)
try:
    rl.GreenSolver(op_bad, k_bad)
    print("SpectralError NOT raised")
except Exception as exc:
    print("raised:", type(exc).__name__)
op_ok = rl.RadialOperator(
    nu=modes5[0].nu, k2=(k_bad * 1.01) ** 2, potential=p51.potential,
    mode=modes5[0], n=5, decay_l=4.0,
)
rl.GreenSolver(op_ok, k_bad * 1.01)
print("nearby k fine")
stamp("spectral error")

# ---------------------------------------------------------------- 10. zero solutions
op5_1b = rl.reduce(p51, modes5[1], 0.0)
regz, decz = rl.zero_solutions(op5_1b)
print("planted51 mode1 dec fits:", decz.fit_at_0.exponent, decz.fit_at_inf.exponent)
print("planted51 mode1 reg fits:", regz.fit_at_0.exponent, regz.fit_at_inf.exponent)
stamp("zero solutions")
