"""
How much do platoons save on a regional network?
================================================

Random customers on a 38-city road graph around Nanjing. We vary the
platoon size limit and the follower saving ratio and watch the benefit.
The same sweeps are available from the command line through
``truckplatoon bench``.
"""

# %%
from truckplatoon import SolverConfig, benefit_curve, platooning_benefit
from truckplatoon.io import generate_instance_document, instance_from_dict

config = SolverConfig(iteration_limit=40)


def scenario(seed, customers=15, **params):
    doc = generate_instance_document("yangtze", customers, seed, tw_tolerance=20.0, params=params or None)
    return instance_from_dict(doc)


# %%
# Benefit against the platoon size limit. Each size starts from the best
# plan of the previous one, so the curve never drops.
for seed in range(3):
    curve = benefit_curve(scenario(seed), [1, 2, 3, 4, 5], config)
    print(seed, [f"{100 * curve[L].percent:.2f}%" for L in sorted(curve)])

# %%
# Benefit against the follower saving ratio.
for beta in (0.0, 0.05, 0.1, 0.15):
    b = platooning_benefit(scenario(0, beta=beta), config)
    print(f"beta={beta:.2f}: saves {b.benefit:8.2f} ({100 * b.percent:.2f}% of total cost)")

# %%
# Wider time windows give trucks room to wait for each other.
for tol in (5.0, 10.0, 20.0, 40.0):
    doc = generate_instance_document("yangtze", 15, 0, tw_tolerance=tol)
    b = platooning_benefit(instance_from_dict(doc), config)
    print(f"window slack {tol:4.0f} h: {100 * b.percent:.2f}%")
