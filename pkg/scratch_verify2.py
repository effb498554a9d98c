"""Second verification pass for constants going into test_radial_lab."""
import math

import numpy as np
from scipy.special import iv, ive, kv, kve

from conelab.cone_model import ConeGeometry, Mode, mode_table, sphere_volume
from conelab import radial_lab as rl
from conelab.errors import (
    DomainError, NumericError, ObstructionError, RangeError, SpectralError,
    AmbiguityError,
)

p51 = rl.planted_problem(5, 1)
modes5 = mode_table(p51.geom, 2)

# 1. eps = 1e-3 scaled potential must be cleanly kernel-free
V13 = lambda r: 1.001 * p51.potential(r)
prob13 = rl.RadialProblem(n=5, potential=V13, geom=p51.geom, decay_l=4.0,
                          decay_C=p51.decay_C * 1.01, decay_r0=1.0)
rep13 = rl.detect_kernel(prob13, j_max=1)
print("1. eps=1e-3:", "kernel" if rep13.kernel_modes else "clear", rep13.m)

# 2. cap violation: free n=3 j=0, const tail vs cap -0.5
op30 = rl.reduce(rl.free_problem(3), mode_table(ConeGeometry(n=3), 0)[0], 0.0)
try:
    rl.solve_source(op30, lambda r: math.exp(-math.log(r) ** 2),
                    behavior_window=(0.8, -0.5))
    print("2. cap violation NOT raised")
except NumericError as exc:
    print("2. cap violation raised, achieved =", exc.achieved)

# 3. obstruction pairing attribute
rep51 = rl.detect_kernel(p51, j_max=1)
km51 = rep51.kernel_modes[0]
psi = lambda r: km51.profile.u(r) * km51.norm_constant
op51 = rl.reduce(p51, modes5[1], 0.0)
try:
    rl.solve_source(op51, psi, behavior_window=(2.8, -1.8))
    print("3. obstruction NOT raised")
except ObstructionError as exc:
    print("3. obstruction pairing =", exc.pairing)

# 4. free-pair wronskian, k = 0 and k > 0
geom5 = ConeGeometry(n=5)
for nu in (0.4, 1.5, 3.7):
    md = Mode(j=0, lam=nu * nu - 2.25, nu=nu, multiplicity=1, n=5, kind="explicit")
    op = rl.RadialOperator(nu=nu, k2=0.0, potential=lambda r: 0.0, mode=md,
                           n=5, decay_l=4.0)
    reg, dec = rl.zero_solutions(op)
    vals = [rl.wronskian(dec.solution, reg.solution, r) for r in (0.5, 1.0, 2.0)]
    print("4. nu=%.2f  W/2nu:" % nu,
          [w * math.exp(ls) / (2.0 * nu) for w, ls, _ in vals])
op5k = rl.reduce(rl.free_problem(5), modes5[0], 0.8)
solver = rl.GreenSolver(op5k, 0.8)
w, ls, _ = rl.wronskian(solver.dec, solver.reg, 1.3)
print("4b. k>0 free wronskian:", w * math.exp(ls))

# 5. fp scaling relation at s = 0.7 and s = 3.0
c4 = 1.0 / math.sqrt(sphere_volume(4))
for s in (0.7, 3.0):
    fp = rl.finite_part_norm(lambda r: c4 / (s * s + r * r), n=4)
    print("5. s=%.1f fp=%.8f expect %.8f" % (s, fp, -0.5 - math.log(s)))

# 6. free n=5 j=1 zero solution fits
op51f = rl.reduce(rl.free_problem(5), modes5[1], 0.0)
regf, decf = rl.zero_solutions(op51f)
print("6. reg fit0:", regf.fit_at_0.exponent, regf.fit_at_0.coefficient,
      "inf:", regf.fit_at_inf.exponent, regf.fit_at_inf.coefficient)
print("   dec fit0:", decf.fit_at_0.exponent, decf.fit_at_0.coefficient,
      "inf:", decf.fit_at_inf.exponent, decf.fit_at_inf.coefficient)
print("   dec sign_at_inf:", decf.sign_at_inf, "reg:", regf.sign_at_inf)

# 7. free green vs scipy iv/kv
k = 0.8
nu0 = modes5[0].nu
g1 = solver.green(0.7, 2.1)
ref1 = math.sqrt(0.7 * 2.1) * iv(nu0, k * 0.7) * kv(nu0, k * 2.1)
print("7. green rel:", abs(g1 - ref1) / ref1,
      "sym:", abs(solver.green(2.1, 0.7) - g1) / g1)
gf = solver.green(0.7, 2.1, convention="function")
gb = solver.green(0.7, 2.1, convention="b_half_density")
print("   conv function:", gf / (g1 * (0.7 * 2.1) ** -2.0),
      "b:", gb / (g1 * math.sqrt(0.7 * 2.1)))
# deep decay log_green vs scaled bessels
op5k2 = rl.reduce(rl.free_problem(5), modes5[0], 2.0)
solver2 = rl.GreenSolver(op5k2, 2.0, r_eval_max=500.0)
sgn, la = solver2.log_green(100.0, 400.0)
ref_la = (math.log(math.sqrt(100.0 * 400.0) * ive(nu0, 200.0) * kve(nu0, 800.0))
          + 2.0 * (100.0 - 400.0))
print("   log_green:", sgn, la, "ref:", ref_la, "diff:", la - ref_la)

# 8. RangeError on the regular branch at k = 2, r = 400
try:
    solver2.reg.u(400.0)
    print("8. RangeError NOT raised")
except RangeError as exc:
    print("8. RangeError cap =", exc.cap)

# 9. potential_from_mode FD fallback vs closed-form derivatives
prof_terms = [(1.0, modes5[1].nu - 1.0), (2.0, 1.0)]
def f_asym(r):
    return r * (1.0 + r * r) ** -(modes5[1].nu - 1.0) / (1.0 + 2.0 * r * r)
p_fd = rl.potential_from_mode(5, 1, f_asym)
errs = [abs(p_fd.potential(r) - p51.potential(r)) / abs(p51.potential(r))
        for r in (0.1, 0.5, 1.0, 3.0, 10.0)]
print("9. FD fallback rel errs:", max(errs))
try:
    rl.potential_from_mode(5, 1, lambda r: r * abs(r * r - 1.0) / (1.0 + r * r) ** 3)
    print("9b. zero-crossing NOT raised")
except DomainError as exc:
    print("9b. zero-crossing raised")
try:
    rl.potential_from_mode(5, 1, lambda r: r * r * (1.0 + r * r) ** -2.5)
    print("9c. wrong origin NOT raised")
except DomainError:
    print("9c. wrong origin raised")
try:
    rl.potential_from_mode(5, 1, lambda r: r * (1.0 + r * r) ** -2.0)
    print("9d. wrong tail NOT raised")
except DomainError:
    print("9d. wrong tail raised")

# 10. conic detections
geom_res = ConeGeometry(n=3, link="scaled_sphere", c=math.sqrt(6.4))
print("10. nu1(res geom):", mode_table(geom_res, 1)[1].nu)
prob_res = rl.planted_conic_problem(geom_res, 1)
rep_res = rl.detect_kernel(prob_res, j_max=1)
print("    resonance modes:", [m.mode.j for m in rep_res.resonance_modes],
      "kernel:", [m.mode.j for m in rep_res.kernel_modes],
      "resonance flag:", rep_res.resonance)
geom_l2 = ConeGeometry(n=3, link="scaled_sphere", c=math.sqrt(2.0 / 1.3125))
print("    nu1(l2 geom):", mode_table(geom_l2, 1)[1].nu)
prob_l2 = rl.planted_conic_problem(geom_l2, 1)
rep_l2 = rl.detect_kernel(prob_l2, j_max=1)
kml2 = rep_l2.kernel_modes[0]
print("    l2 kernel j:", kml2.mode.j, "vanishing:", kml2.vanishing_order,
      "m:", rep_l2.m)

# 11. planted31 symmetric tower:资 kernel j=1 plus resonance j=0
p31s = rl.planted_problem(3, 1, symmetric=True)
rep31 = rl.detect_kernel(p31s, j_max=1)
print("11. n=3 sym tower: kernel", [m.mode.j for m in rep31.kernel_modes],
      "resonance", [m.mode.j for m in rep31.resonance_modes],
      "m =", rep31.m, "decay_ok:", rep31.decay_condition_ok)

# 12. planted40 symmetric: resonance only, unit leading coefficient
p40s = rl.planted_problem(4, 0, symmetric=True)
rep40 = rl.detect_kernel(p40s, j_max=1)
rm = rep40.resonance_modes[0]
print("12. n=4: kernel", len(rep40.kernel_modes), "resonance nu:", rm.nu,
      "coeff_at_inf:", rm.coeff_at_inf, "m:", rep40.m,
      "to_dict m:", rep40.to_dict()["m"])

# 13. floor violation on manufactured solve
op50f = rl.reduce(rl.free_problem(5), modes5[0], 0.0)
try:
    rl.solve_source(op50f, lambda r: r * (4.0 - r) * math.exp(-r),
                    behavior_window=(3.5, -0.5))
    print("13. floor violation NOT raised")
except NumericError as exc:
    print("13. floor violation achieved =", exc.achieved)

# 14. green_function cache rebuild consistency
opg = rl.reduce(rl.free_problem(5), modes5[1], 0.7)
v_small = rl.green_function(opg, 0.7, 1.0, 2.0)
v_big = rl.green_function(opg, 0.7, 1.0, 90.0)
v_small2 = rl.green_function(opg, 0.7, 1.0, 2.0)
print("14. cache consistency:", abs(v_small - v_small2) / v_small)

# 15. GreenSample validation errors
try:
    rl.GreenSample(k=0.5, r=1.0, r_p=2.0, mode=0, value=0.1, convention="weird")
    print("15. convention NOT raised")
except DomainError:
    print("15. convention raised")
try:
    rl.GreenSample(k=-0.5, r=1.0, r_p=2.0, mode=0, value=0.1,
                   convention="sc_half_density")
    print("15b. negative k NOT raised")
except DomainError:
    print("15b. negative k raised")

# 16. fit_exponent synthetic recovery
def synth(r):
    t = math.log(r)
    return 1.0, math.log(3.0) + 2.5 * t + 1.25 * math.log(abs(t))
fit = rl.fit_exponent(synth, 10.0, 1.0e4)
print("16. synth:", fit.exponent, fit.log_power, fit.coefficient, fit.has_log)
fit2 = rl.fit_exponent(lambda r: (1.0, 4.0 * math.log(r)), 0.5, 50.0)
print("    near-1 window log dropped:", fit2.log_power, fit2.exponent)
