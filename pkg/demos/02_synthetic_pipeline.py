# coding: utf-8

# # A whole market in miniature
#
# Three IPOs and one mature stock, a few hundred investors trading at random,
# and some planted groups that trade together.  We run the same steps as the
# command line and read the tables back.

# In[1]:

import csv
import json
import sys
import tempfile
from pathlib import Path

from svnet import PipelineConfig, ScenarioConfig, generate, run_analyze, run_infer, run_report
from svnet.ingest import write_attributes, write_calendar, write_transactions

out = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="svnet-demo-"))


# A group may span several securities, only one window, or a mature stock.
# "hh" is mostly households from one region, which the expression step
# should pick up.

# In[2]:

scenario = ScenarioConfig.from_dict({
    "seed": 7,
    "investors": 600,
    "noise_rate": 0.04,
    "securities": [
        {"security_id": "IPO_A", "ipo_date": "2006-01-02"},
        {"security_id": "IPO_B", "ipo_date": "2006-02-01"},
        {"security_id": "IPO_C", "ipo_date": "2006-04-03"},
        {"security_id": "OLD_X", "ipo_date": "1998-06-01", "mature": True},
    ],
    "groups": [
        {"name": "everywhere", "size": 10},
        {"name": "first_year", "size": 8, "state": "s", "windows": ["Y1"]},
        {"name": "with_old", "size": 8, "state": "bs", "securities": ["IPO_A", "OLD_X"]},
        {"name": "hh", "size": 12, "securities": ["IPO_B"],
         "attributes": {"sector": {"Households": 1.0}, "location": {"Lapland": 0.9, "Uusimaa": 0.1}}},
    ],
})
scen = generate(scenario)
print(len(scen.transactions), "transactions,", len(scen.ground_truth["planted_pairs"]), "planted pairs")


# The pipeline reads files, so write the inputs out first.

# In[3]:

out.mkdir(parents=True, exist_ok=True)
with open(out / "transactions.csv", "w", newline="") as fh:
    write_transactions(scen.transactions, fh)
with open(out / "attributes.csv", "w", newline="") as fh:
    write_attributes(scen.attributes, fh)
with open(out / "calendar.csv", "w", newline="") as fh:
    write_calendar({k: v for k, v in scen.ipo_dates.items() if k not in scen.mature}, fh)

cfg = PipelineConfig(
    transactions=str(out / "transactions.csv"), attributes=str(out / "attributes.csv"),
    calendar=str(out / "calendar.csv"), mature=scen.mature, data_end=scen.data_end.isoformat(),
    out=str(out / "results"), trials=50,
)


# In[4]:

manifest = run_infer(cfg)
for n in manifest["networks"]:
    print(f"{n['security_id']:>6} {n['window']:<9} nodes {n['nodes']:>3}  edges {n['edges']:>3}  clusters {n['clusters']}")


# Persistence, cross-security overlap, the mature comparison and the
# attribute tests all happen in one call.

# In[5]:

summary = run_analyze(cfg)
print(json.dumps(summary["cross_security"], indent=1))
print(run_report(cfg))


# Which clusters are over-expressed for an attribute?  "hh" should show up
# in IPO_B with Households and Lapland.

# In[6]:

with open(out / "results" / "analyze" / "expression.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        if row["direction"] == "over":
            print(row["security_id"], row["window"], row["cluster_id"], row["attr_class"], row["attr_value"],
                  f"{row['N_CQ']}/{row['N_C']}", f"p={float(row['p_value']):.1e}")

print("results in", out / "results")
