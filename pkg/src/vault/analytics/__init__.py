from vault.analytics.pca import PcaResult, pca_fit
from vault.analytics.normalize import normalize_values
from vault.analytics.kde import KdeGrid, kde_grid, mean_shift_cluster
from vault.analytics.tsne import (
    TsneParams,
    TsneState,
    compute_affinities,
    kl_and_grad,
    tsne_init,
    tsne_step,
)

__all__ = [
    "PcaResult",
    "pca_fit",
    "normalize_values",
    "KdeGrid",
    "kde_grid",
    "mean_shift_cluster",
    "TsneParams",
    "TsneState",
    "compute_affinities",
    "kl_and_grad",
    "tsne_init",
    "tsne_step",
]
