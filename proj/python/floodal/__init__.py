"""Pool-based active learning workbench for binary flood segmentation.

The compiled core exposes the main operations: HSV preprocessing, synthetic
scene generation, tile container I/O, the BPR/MDF/FPR indices, acquisition
scores, rank-correlation and density statistics, and the dropout segmenter.
"""

from floodal._core import (  # noqa: F401
    FloodalConfigError,
    FloodalDataError,
    FloodalRuntimeError,
    Segmenter,
    bald_score,
    bpr,
    entropy_score,
    fpr,
    generate_scene,
    hsv_preprocess,
    iso_levels,
    kde2d,
    load_tile,
    margin_score,
    mdf,
    pearson,
    quarter,
    run_experiment,
    save_tile,
    spearman,
    split_pearson,
    __version__,
)

NON_FLOOD = 0
FLOOD = 1
NO_DATA = 255
