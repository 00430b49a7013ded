"""Simulation and analysis of a cavity single-photon source driving an integrated linear-optics CNOT."""
from .optics import (CNOT, CouplerElement, LogicalOperator, ModeNetwork, PhaseShifter, TopologyError,
                     bell_network, cnot_network, compile_network, coupler_unitary, post_selected_operator,
                     reverse_pass_unitary)
from .temporal import (JointDensity, Wavepacket, coincidence_vs_tau, default_envelope, hom_visibility,
                       overlap, permanent_oracle, two_photon_density)
from .source import ChannelMap, DetectorConfig, SourceConfig, detect, pair_router, simulate_emissions
from .eventlog import DetectionEvent, EventLog, read_event_log, write_event_log
from .analysis import (CoincidenceHistogram, CountTable, FidelityBound, ProbabilityTable, background_correct,
                       coincidence_pairs, fidelity_bound, fidelity_vs_delay, g2_histogram, mle_normalize,
                       pauli_expectation, similarity, similarity_vs_delay, truth_table)
from .config import ExperimentConfig
from .experiments import RunReport, bell_state_preparation, preset, run

__version__ = "0.1.0"
