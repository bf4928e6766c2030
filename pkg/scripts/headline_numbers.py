"""Print the base-case coefficients next to their Merton comparators."""
from kmm_portfolio import CARA, CRRA, GaussianSOD, MarketParams, merton_baseline, solve_cara, solve_crra
from kmm_portfolio.closed_form import budget_value, merton_solution

mp = MarketParams()
sod = GaussianSOD.from_sigma0(mp, 2.0)

crra = solve_crra(mp, sod, -0.5, 1 / 3)
base = merton_baseline(mp, CRRA(1 / 3))
print("CRRA  p=%.10f  q=%.10f  c=%.10f" % (crra.p, crra.q, crra.c))
print("      w^2 coef %.6f   w coef %.6f   (Merton %.6f)" % (crra.w2_coefficient, crra.w_coefficient, base.slope))
print("      pi0 %.10f   (Merton %.6f)" % (crra.initial_position(), base.initial_position))
print("      E^Q[X_T] %.16f" % budget_value(crra))
neutral = merton_solution(mp, CRRA(1 / 3), -0.5, sod)
print("      value %.10f   (Merton under the same criterion %.10f)" % (crra.value_function(), neutral.value_function()))

cara = solve_cara(mp, sod, -0.5, 1.0)
cbase = merton_baseline(mp, CARA(1.0))
print("CARA  p=%.10f  q=%.10f  c=%.10f" % (cara.p, cara.q, cara.c))
print("      pi0 %.10f   (Merton %.6f)" % (cara.initial_position(), cbase.initial_position))
