from ._mlpg import (
    build_graph,
    compile_ok,
    generate_corpus,
    misuse_slots,
    naming_targets,
    pr_auc,
    split_subtokens,
    subtoken_f1,
)

__all__ = [
    "build_graph",
    "compile_ok",
    "generate_corpus",
    "misuse_slots",
    "naming_targets",
    "pr_auc",
    "split_subtokens",
    "subtoken_f1",
]
