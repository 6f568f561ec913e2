# coding: utf-8

# # How often does noise get through?
#
# With nobody coordinating, every validated link is a false discovery.  The
# FDR rule promises that on average at most a fraction alpha of what it keeps
# is false, which under a global null means that at most alpha of the
# windows should produce any link at all.

# In[1]:

import numpy as np

from svnet import EncoderConfig, FdrConfig, ScenarioConfig, aggregate_daily, build_windows, encode, filter_active
from svnet import generate, validate_security_window


def noise_window(seed, investors=500, rate=0.04):
    scen = generate(ScenarioConfig.from_dict(
        {"seed": seed, "investors": investors, "securities": 1, "noise_rate": rate}))
    daily = aggregate_daily(scen.transactions)
    y1, y2 = build_windows(scen.ipo_dates["SEC000"])
    m1, _ = filter_active(encode(daily, EncoderConfig(), y1), encode(daily, EncoderConfig(), y2), 5)
    return m1


# In[2]:

rows = []
for seed in range(30):
    m = noise_window(seed)
    for mode in ("step_up", "literal"):
        links, rep = validate_security_window(m, FdrConfig(0.05, mode))
        rows.append((seed, mode, rep.n_tests, len(links), rep.sorted_p_values[0]))

for mode in ("step_up", "literal"):
    sel = [r for r in rows if r[1] == mode]
    hit = sum(r[3] > 0 for r in sel)
    print(f"{mode:>8}: {hit}/{len(sel)} windows with a link, "
          f"{sum(r[3] for r in sel)} links out of {sum(r[2] for r in sel)} tests")


# The first FDR threshold is alpha / n_tests.  Under the null the smallest
# p-value times n_tests is of order one, comfortably above alpha, which is
# why most windows keep nothing.

# In[3]:

best = np.array([r[4] for r in rows if r[1] == "step_up"])
n = np.array([r[2] for r in rows if r[1] == "step_up"])
print("median of min p * n_tests:", float(np.median(best * n)))


# Only pairs that share at least one same-state day are tested.  Pairs that
# never meet would contribute p = 1 and only make the threshold stricter, so
# leaving them out makes the family slightly less conservative.

# In[4]:

m = noise_window(0)
n_inv = len(m.investors)
_, rep = validate_security_window(m)
print(f"{rep.n_tests} co-occurrences among {n_inv * (n_inv - 1) // 2} investor pairs")
