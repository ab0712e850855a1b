from dependency_translator.models.monolingual import MonolingualModel
from dependency_translator.models.transfer import StructuralRule, TransferModel
from dependency_translator.models.estimation import (
    BitextRecord,
    MonolingualCounts,
    TransferCounts,
    TreebankRecord,
    estimate_monolingual,
    estimate_transfer,
)

__all__ = [
    "MonolingualModel",
    "StructuralRule",
    "TransferModel",
    "BitextRecord",
    "MonolingualCounts",
    "TransferCounts",
    "TreebankRecord",
    "estimate_monolingual",
    "estimate_transfer",
]
