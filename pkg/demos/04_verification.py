"""Run the verification oracles and show the fault-injection self-test.

The suites validate, on seeded random instances:
  * terminal separation certificates reproduce the plain intersection cut
    read from the same basis (theorem3) and, strengthened, the GMI cut
    (theorem4);
  * membership optima agree with the multiplier-LP optima (duality);
  * at a vertex, the separation solution is the scaled point (proposition3);
  * emitted cuts never remove an enumerated integer-feasible point
    (validity).

Tightening every cut's right-hand side by 0.3 must make the validity
check fail: that is the self-test that the checker can actually see
invalid cuts.
"""

from liftproject.verify import run_suite

for suite in ("theorem3", "theorem4", "duality", "proposition3", "validity"):
    count = 40 if suite != "validity" else 10
    res = run_suite(suite, count=count, seed=7)
    print(
        f"{suite:<13} cases={res.cases:<4} passed={res.passed:<4} "
        f"failed={res.failed:<3} skipped={res.skipped}"
    )

print("\nfault injection (every cut tightened by 0.3):")
res = run_suite("validity", count=6, seed=7, corrupt_rhs=0.3)
print(f"validity      failed={res.failed} (expected > 0)")
if res.failures:
    print("first counterexample:", res.failures[0])
