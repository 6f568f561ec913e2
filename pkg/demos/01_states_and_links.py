# coding: utf-8

# # From trades to validated links
#
# A walk through the smallest possible example: two investors, a handful of
# trading days, and the question of whether their shared buying days are
# more than coincidence.

# In[1]:

from datetime import date, timedelta

import numpy as np

from svnet import (
    EncoderConfig, FdrConfig, Transaction, aggregate_daily, build_windows, encode, fdr_select,
    hypergeom_sf, validate_security_window,
)


# Each investor's daily net volume becomes one of three states.  With the
# default threshold of 0.01, a day with 300 bought and 100 sold shares has
# ratio 0.5 and is a buying day.

# In[2]:

ipo = date(2006, 1, 2)
days = [ipo + timedelta(days=k) for k in range(40)]
rng = np.random.default_rng(1)

txns = []
shared = sorted(rng.choice(40, size=12, replace=False))
for k in shared:
    txns.append(Transaction("ALICE", "DEMO", days[k], 300, 100))
    txns.append(Transaction("BOB", "DEMO", days[k], 50, 0))
for k in rng.choice(40, size=6, replace=False):
    txns.append(Transaction("CAROL", "DEMO", days[k], 0, 80))
# everyone else trades now and then so that every day counts
for k in range(40):
    txns.append(Transaction(f"X{k % 7}", "DEMO", days[k], int(rng.integers(1, 9)), int(rng.integers(1, 9))))

daily = aggregate_daily(txns)
y1, _ = build_windows(ipo)
m = encode(daily, EncoderConfig(theta=0.01), y1)
print(len(m.investors), "investors over", len(m.trading_days), "trading days")
print("ALICE:", sorted({s.value for s in m.states("ALICE").values()}))


# ALICE and BOB buy on the same 12 of 40 days.  Under the null each of them
# picks their active days at random, so the overlap is hypergeometric.

# In[3]:

p = hypergeom_sf(40, 12, 12, 12)
print(f"p-value of a full 12-day overlap: {p:.3e}")


# The pipeline tests every co-occurring pair of the window in one FDR family.
# Its universe is the overlap of the two investors' activity periods rather
# than all 40 days, so the p-value below is a little larger.

# In[4]:

links, report = validate_security_window(m, FdrConfig(alpha=0.05))
print(report.n_tests, "co-occurrences tested,", report.n_validated, "validated")
for link in links:
    print(f"  {link.investor_i} - {link.investor_j} [{link.state.value}] p={link.p_value:.2e}")


# The step-up rule keeps every rank up to the largest passing one, the
# literal rule keeps only ranks that pass on their own.

# In[5]:

pv = np.array([0.001, 0.025, 0.028, 0.5])
print("step_up:", fdr_select(pv, 0.05, 4, "step_up").astype(int))
print("literal:", fdr_select(pv, 0.05, 4, "literal").astype(int))
