from .batching import batch_iter
from .dataset_io import DatasetSplits, load_dataset, save_dataset
from .encode import (EncodedDataset, EncodedSplits, encode_samples,
                     encode_splits, pad_widths)
from .movielens import Interaction, InteractionLog, parse_movielens
from .slates import SlateSample, binarize_rating, build_slates, split_dataset
from .synth import (SynthConfig, SynthLatents, click_probabilities,
                    make_latents, synth_generate)
from .vocab import FeatureVocab, build_vocab

__all__ = [
    "DatasetSplits", "EncodedDataset", "EncodedSplits", "FeatureVocab",
    "Interaction", "InteractionLog", "SlateSample", "SynthConfig",
    "SynthLatents", "batch_iter", "binarize_rating", "build_slates",
    "build_vocab", "click_probabilities", "encode_samples", "encode_splits",
    "load_dataset", "make_latents", "pad_widths", "parse_movielens",
    "save_dataset", "split_dataset", "synth_generate",
]
