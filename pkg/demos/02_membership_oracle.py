"""The membership LP as a yes/no oracle, and its exact duality with the
explicit multiplier-space cut LP.

Three situations on the interval P = [0, 3] with x integer:
  * a point inside the disjunctive hull  -> non-negative optimum, no cut;
  * a vertex of the relaxation           -> optimum (f-1)f, a cut exists;
  * any separation                        -> membership optimum equals the
    multiplier LP optimum (they are duals of each other).
"""

import numpy as np

from liftproject import FractionalPoint, build_membership_lp, membership_value
from liftproject.instances import NormalizedMilp
from liftproject.membership import build_cglp, solve_cglp
from liftproject.verify import random_milp


def interval(upper):
    return NormalizedMilp(
        name="interval",
        objective=np.array([1.0]),
        a=np.array([[-1.0]]),
        b=np.array([-float(upper)]),
        num_integer=1,
        objective_offset=0.0,
        objective_sign=1.0,
        perm=np.array([0]),
        shift=np.zeros(1),
        col_names=["x"],
        row_labels=["ub"],
    )


nm = interval(3.0)

# x = 1.5 lies in conv([0,1] u [2,3]) = [0,3]: the oracle says inside
pt = FractionalPoint.from_point(nm, np.array([1.5]))
value, _ = membership_value(build_membership_lp(nm, pt, 0))
print("x=1.5 on [0,3]: membership optimum", value, "(>= 0: inside, no cut)")

# x = 0.5 on [0, 0.8]: the hull of the disjunction is {0}, the point is out
nm2 = interval(0.8)
pt2 = FractionalPoint.from_point(nm2, np.array([0.5]))
value2, _ = membership_value(build_membership_lp(nm2, pt2, 0))
print("x=0.5 on [0,0.8]: membership optimum", value2, "(< 0: cut exists)")

# duality against the explicit multiplier LP on random instances
rng = np.random.default_rng(1)
print("\nmembership vs multiplier-LP optimum on random instances:")
shown = 0
while shown < 5:
    inst = random_milp(rng)
    from liftproject.verify import _fractional_ks, _master_vertex

    x = _master_vertex(inst.nm)
    if x is None:
        continue
    try:
        pt = FractionalPoint.from_point(inst.nm, x)
    except ValueError:
        continue
    ks = _fractional_ks(pt)
    if not ks:
        continue
    k = ks[0]
    mval, _ = membership_value(build_membership_lp(inst.nm, pt, k))
    pi = np.zeros(inst.nm.num_cols)
    pi[k] = 1.0
    cval, _ = solve_cglp(build_cglp(inst.nm, pt, pi, np.floor(pt.x[k])))
    print(f"  n={inst.nm.num_cols} k={k}: membership {mval:+.6f}  multiplier {cval:+.6f}")
    shown += 1
