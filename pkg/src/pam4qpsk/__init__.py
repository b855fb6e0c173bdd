"""PAM4 -> QPSK optical format conversion with geometric shaping and neural demapping."""

from .constellation import ShapedConstellation, labeling_table, unshaped_qpsk
from .demappers import HardDemapper, LinearEqualizerDemapper, NeuralDemapper
from .gateway import (
    HNLF_A,
    HNLF_B,
    FiberCascade,
    FiberSpec,
    XpmGateway,
    XpmModelConfig,
    cascade_effective_length,
    convert_pam4_to_qpsk,
    effective_length,
    reference_constellation,
    xpm_phase,
)
from .metrics import ber_count, gmi_from_llrs, phase_stats_per_level
from .signal import ComplexWaveform, awgn_add, db_to_linear, dbm_to_watts, prbs_generate

__version__ = "0.1.0"
