"""Block-parallel connected components labeling with coarse-to-fine local passes."""

from .border import BorderPlan, merge_borders, plan_borders, resolve_global
from .forest import BlockMetrics, LabelForest
from .generate import pattern_image, random_image
from .local import (
    BlockView,
    coarse_column_scan,
    coarse_row_scan,
    convert_ids,
    flatten_block,
    init_block,
    label_block,
    refine,
)
from .oracle import same_partition, sequential_ccl
from .pipeline import MetricsSummary, RunReport, aggregate_metrics, compact_labels, label_image
from .types import (
    SENTINEL,
    BinaryImage,
    BlockConfig,
    ConfigError,
    LabelMap,
    Variant,
    block_of,
    from_block,
    position,
)

__version__ = "0.1.0"
