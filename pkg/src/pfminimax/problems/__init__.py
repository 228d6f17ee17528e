"""Concrete payoff problems: synthetic games and the two applications."""

from .dictionary import (
    DL_DESK_SIZES,
    DL_PAPER_PARAMS,
    DL_PAPER_SIZES,
    DLData,
    DictionaryLearning,
    dictionary_learning,
    dl_generate,
    lipschitz_dl,
)
from .games import (
    MatrixGame,
    QuadraticSaddle,
    matrix_game,
    quadratic_saddle,
    random_matrix_game,
    random_quadratic_saddle,
)
from .io import (
    Samples,
    read_libsvm,
    read_matrix_csv,
    read_mmx,
    write_libsvm,
    write_matrix_csv,
    write_mmx,
)
from .robust import (
    RC_PAPER_PARAMS,
    RobustClassification,
    lipschitz_rc,
    rc_generate,
    robust_classification,
)

__all__ = [
    "DL_DESK_SIZES",
    "DL_PAPER_PARAMS",
    "DL_PAPER_SIZES",
    "DLData",
    "DictionaryLearning",
    "MatrixGame",
    "QuadraticSaddle",
    "RC_PAPER_PARAMS",
    "RobustClassification",
    "Samples",
    "dictionary_learning",
    "dl_generate",
    "lipschitz_dl",
    "lipschitz_rc",
    "matrix_game",
    "quadratic_saddle",
    "random_matrix_game",
    "random_quadratic_saddle",
    "rc_generate",
    "read_libsvm",
    "read_matrix_csv",
    "read_mmx",
    "robust_classification",
    "write_libsvm",
    "write_matrix_csv",
    "write_mmx",
]
