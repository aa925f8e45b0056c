"""Multilevel coset codes on lattice constellations with non-binary polar components."""

from .codec import BombeCode, decode_frame, decode_frames, encode_frame
from .constellation import ShapedConstellation, build
from .lattice import Lattice, PartitionChain, d4_lattice, integer_lattice, quantize
from .polar import PolarLevelCode, decode_sc, decode_scl, encode
from .sim import SimConfig, compare_curves, run_sweep

__all__ = [
    "BombeCode",
    "Lattice",
    "PartitionChain",
    "PolarLevelCode",
    "ShapedConstellation",
    "SimConfig",
    "build",
    "compare_curves",
    "d4_lattice",
    "decode_frame",
    "decode_frames",
    "decode_sc",
    "decode_scl",
    "encode",
    "encode_frame",
    "integer_lattice",
    "quantize",
    "run_sweep",
]
