"""Synthetic oversampling and distribution auditing for multi-class imbalanced tabular data."""

from .core import (ClassPartition, DataError, FeatureTable, RatingSet, aggregate_rating,
                   load_csv, partition, write_csv)
from .divergence import (DivergenceReport, Histogram, audit, build_histogram, js_divergence,
                         js_similarity)
from .evaluation import (ComparisonReport, ExperimentReport, SplitSpec, run_experiment,
                         run_methods, stratified_split)
from .forest import ForestParams, RandomForest, train_forest
from .neighbors import NeighborIndex, NeighborSet, build_index
from .oversamplers import (BalancePlan, DangerLabel, Method, SamplerConfig, SyntheticBatch,
                           adasyn, assign_danger, borderline1, borderline2, plan_balance,
                           random_oversample, resample, smote, smote_interpolate)

__version__ = "0.1.0"
