"""Subspace feature extraction for face recognition.

Ten extractors share one recipe (learn a basis from training images,
project, classify with a minimum-distance rule): PCA, 2DPCA, ECA, 2DECA,
R1-PCA, 2DR1-PCA, L1-PCA, 2DL1-PCA, KPCA and KECA. Each is available as a
plain function returning an immutable model and as a scikit-learn style
estimator.
"""

from .dataset import (
    Dataset,
    ImageSample,
    PGMFormatError,
    Split,
    columns_of,
    inject_outliers,
    load_corpus,
    load_pgm,
    split,
    synth_gaussian,
    vectorize,
    write_pgm,
)
from .kernel import KECA, KPCA, KernelModel, fit_keca, fit_kpca, kernel_matrix, project_kernel, renyi_entropy_estimate
from .linear import (
    ECA,
    PCA,
    FeatureSet,
    LinearModel,
    TwoDECA,
    TwoDPCA,
    ZeroCovarianceError,
    entropy_terms,
    fit_2deca,
    fit_2dpca,
    fit_eca,
    fit_pca,
    project,
)
from .numeric import SubspaceBasis, SymEigen, eigh_desc, orthonormalize, projector_distance
from .recognition import MinimumDistanceClassifier, Prediction, accuracy, classify
from .robust import (
    L1PCA,
    R1PCA,
    ConvergenceTrace,
    TwoDL1PCA,
    TwoDR1PCA,
    fit_2dl1pca,
    fit_2dr1pca,
    fit_l1pca,
    fit_r1pca,
    l1_component,
    l1_greedy,
)

__version__ = "0.1.0"
