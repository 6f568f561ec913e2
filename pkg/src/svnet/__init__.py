"""Statistically validated trade-timing networks and their clusters.

Typical flow::

    txns = read_transactions("transactions.csv")
    daily = aggregate_daily(filter_universe(txns))
    y1, y2 = build_windows(ipo_date)
    m1, m2 = filter_active(encode(daily, EncoderConfig(), y1), encode(daily, EncoderConfig(), y2), 5)
    links, report = validate_security_window(m1)
    part = detect(assemble(links, "SEC", "Y1"))
"""

from .errors import ConfigError, DataError, SvnetError, WindowTruncationError
from .expression import (
    ExpressionProfile, ExpressionTest, group_expressed_clusters, overexpression_pvalue, profile_network,
    underexpression_pvalue,
)
from .fdr import FdrConfig, fdr_select, fdr_validate
from .hypergeom import hypergeom_cdf, hypergeom_pmf, hypergeom_sf
from .infomap import DetectorConfig, Partition, detect, map_equation
from .ingest import (
    DailyNetVolume, InvestorAttributes, Registration, SecurityCalendar, Transaction, Window, aggregate_daily,
    build_windows, complete_attributes, filter_universe, parse_attributes, parse_calendar, parse_transactions,
    read_transactions,
)
from .links import LinkReport, PairCooccurrence, ValidatedLink, enumerate_cooccurrences, validate_security_window
from .network import ValidatedNetwork, assemble, network_stats
from .pipeline import PipelineConfig, run_analyze, run_infer, run_report
from .similarity import (
    OverlapTest, SimilarityResult, asset_specific, cross_security, ipo_vs_mature, mature_overlaps, persistence,
)
from .states import EncoderConfig, StateMatrix, TradingState, assign_state, encode, filter_active, scaled_net_ratio
from .synthetic import GroupSpec, Scenario, ScenarioConfig, SecuritySpec, generate, planted_partition_network

__version__ = "0.1.0"
