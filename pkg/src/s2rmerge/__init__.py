"""Zero-shot synthetic-to-real checkpoint adaptation via task analogies.

The package combines:

- ``checkpoint``: bit-exact binary storage of named tensor maps;
- ``task_arith``: task-vector differences, synthetic-to-real displacements,
  and single/multi-source weighted merges;
- ``lang_sim``: character n-gram profiles and pairwise language similarity
  (KL, Hellinger, Jaccard) used as merge weights;
- ``metrics``: edit-distance CER/WER evaluation;
- ``selection``: zero-shot grid search over the interpolation strength;
- ``toybench``: a seconds-scale benchmark exercising the whole pipeline on
  procedurally generated languages and tiny recognizers.
"""

from .checkpoint import (
    CheckpointError,
    DtypeMismatch,
    HeaderCorrupt,
    IoFailure,
    KeySetMismatch,
    MagicMismatch,
    ParameterSet,
    ShapeMismatch,
    check_compatible,
    load_checkpoint,
    save_checkpoint,
)
from .lang_sim import (
    NgramProfile,
    SimilarityMatrix,
    build_kl_matrix,
    build_matrix,
    build_profile,
    hellinger_similarity,
    jaccard_similarity,
    kl_similarity,
)
from .metrics import EvalReport, cer, edit_distance, evaluate, wer
from .selection import AlphaGrid, SelectionResult, select_alpha_heldout, select_alpha_oracle
from .task_arith import (
    MergePlan,
    TaskVector,
    apply_multi_analogy,
    apply_single_analogy,
    resolve_betas,
    s2r_delta,
    scale,
    task_vector,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaGrid",
    "CheckpointError",
    "DtypeMismatch",
    "EvalReport",
    "HeaderCorrupt",
    "IoFailure",
    "KeySetMismatch",
    "MagicMismatch",
    "MergePlan",
    "NgramProfile",
    "ParameterSet",
    "SelectionResult",
    "ShapeMismatch",
    "SimilarityMatrix",
    "TaskVector",
    "apply_multi_analogy",
    "apply_single_analogy",
    "build_kl_matrix",
    "build_matrix",
    "build_profile",
    "cer",
    "check_compatible",
    "edit_distance",
    "evaluate",
    "hellinger_similarity",
    "jaccard_similarity",
    "kl_similarity",
    "load_checkpoint",
    "resolve_betas",
    "s2r_delta",
    "save_checkpoint",
    "scale",
    "select_alpha_heldout",
    "select_alpha_oracle",
    "task_vector",
    "wer",
]
