from flowguard.data.generators import (
    INDIST_NAMES,
    OOD_NAMES,
    DatasetHandle,
    NoiseSpec,
    balanced_pair,
    corrupt_bernoulli,
    gen_indist,
    gen_noise_kappa,
    gen_ood,
)
from flowguard.data.io import load_dataset, load_text, read_any, save_dataset
from flowguard.data.quantize import dequantize, quantize

__all__ = [
    "INDIST_NAMES", "OOD_NAMES", "DatasetHandle", "NoiseSpec", "balanced_pair",
    "corrupt_bernoulli", "dequantize", "gen_indist", "gen_noise_kappa", "gen_ood",
    "load_dataset", "load_text", "quantize", "read_any", "save_dataset",
]
