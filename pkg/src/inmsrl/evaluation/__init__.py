from inmsrl.evaluation.abx import (
    ABXRecord,
    AgreementResult,
    abx_agreement,
    abx_split,
    clopper_pearson,
    filter_consensus,
    load_abx_records,
    save_abx_records,
)
from inmsrl.evaluation.index import (
    EmbeddingIndex,
    EmbeddingRow,
    export_embeddings,
    import_embeddings,
    knn5_predict,
    mes_normal,
    mes_pseudo,
)
from inmsrl.evaluation.protocol import (
    PseudoTestPiece,
    VisualizationSegment,
    build_mes_pseudo_set,
    build_visualization_set,
    correct_label_sources,
)

__all__ = [
    "ABXRecord",
    "AgreementResult",
    "abx_agreement",
    "abx_split",
    "clopper_pearson",
    "filter_consensus",
    "load_abx_records",
    "save_abx_records",
    "EmbeddingIndex",
    "EmbeddingRow",
    "export_embeddings",
    "import_embeddings",
    "knn5_predict",
    "mes_normal",
    "mes_pseudo",
    "PseudoTestPiece",
    "VisualizationSegment",
    "build_mes_pseudo_set",
    "build_visualization_set",
    "correct_label_sources",
]
