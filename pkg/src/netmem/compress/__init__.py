"""Memory-assisted codecs: context-tree weighting and preset-dictionary LZ77."""

from .ctw import (
    ContextTreeModel,
    CtwCodec,
    ctw_code_length,
    ctw_decode,
    ctw_encode,
    ctw_prime,
)
from .framing import CorruptStreamError
from .gain import GainRecord, make_codec, measure_gain
from .lz import LzCodec, PresetDictionary, lz_decode_with_dict, lz_encode_with_dict
from .rangecoder import ArithmeticCoderState
from .sources import synthetic

__all__ = [
    "ArithmeticCoderState",
    "ContextTreeModel",
    "CorruptStreamError",
    "CtwCodec",
    "GainRecord",
    "LzCodec",
    "PresetDictionary",
    "ctw_code_length",
    "ctw_decode",
    "ctw_encode",
    "ctw_prime",
    "lz_decode_with_dict",
    "lz_encode_with_dict",
    "make_codec",
    "measure_gain",
    "synthetic",
]
