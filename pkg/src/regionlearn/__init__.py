"""Pool-based active learning with region queries.

A region query asks a labeler whether every pool point inside a region
carries a proposed sign.  The package provides the simulated labeler,
learners for finite hypothesis tables, unions of intervals, axis-parallel
boxes, and halfspaces (a self-directed reduction and an isotropy-transform
pipeline), the query-budget hardness experiment, and a benchmark harness.
"""

from .boxes import AxisBox, find_boundary, label_box
from .forster import (ForsterFailure, ForsterResult, forster_transform,
                      isotropy_check, margin_fraction)
from .general import (HypothesisTable, TabularHypothesis, TeachingInstance,
                      find_balanced_prefix, general_query_learn,
                      teaching_tree_depth)
from .halfspace_sdl import (MaxMarginModel, NotSeparable, max_margin_fit,
                            randomized_svm_learn, self_directed_pass)
from .harness import (ExperimentConfig, Halfspace, Instance, fit_log_slope,
                      generate_instance, run_benchmark, run_single,
                      threshold_table)
from .intervals import UnionOfIntervals, find_left, label_k_intervals
from .lowerbound import (SetFamily, SpikedHypothesis, low_intersection_family,
                         pairwise_intersection_max, run_lower_bound_experiment,
                         select_uncovered_target, spiked_family)
from .oracle import (LearnResult, Oracle, PointSet, QuerySession, RegionQuery,
                     load_points_csv, write_points_csv)
from .perceptron import (PerceptronRun, active_perceptron, learning_ltf,
                         perceptron_update, pullback_query)
from .regions import (AxisHalfspace, FiniteSet, HalfspacePolytope,
                      HypothesisPositiveSet, Interval, TransformedPolytope,
                      empirical_vc_dimension, region_from_json,
                      region_intersects_sample, region_to_json,
                      shattering_witness)

__version__ = "0.1.0"
