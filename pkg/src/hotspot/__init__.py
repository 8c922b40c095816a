"""Drone sampling of a CO2 hotspot: Gaussian plume forward model, ES-MDA
flux estimation and tabular Q-learning of the sampling path."""

__version__ = "0.1.0"

from hotspot.enkf import EnkfConfig, LinearForward, Observation, assimilate, sequential_assimilate_all
from hotspot.environment import Action, AgentState, EpisodeRecord, HotspotEnv, ScenarioConfig
from hotspot.plume import PlumeConfig, Point3, concentration, dispersion, downwind_frame
from hotspot.prior import FluxEnsemble, LognormalParams, ensemble_stats, fit_lognormal, sample_prior
from hotspot.scoring import RewardKind, crps_ensemble, entropy_lognormal, kl_lognormal, step_reward

__all__ = [
    "Action", "AgentState", "EnkfConfig", "EpisodeRecord", "FluxEnsemble", "HotspotEnv",
    "LinearForward", "LognormalParams", "Observation", "PlumeConfig", "Point3", "RewardKind",
    "ScenarioConfig", "assimilate", "concentration", "crps_ensemble", "dispersion", "downwind_frame",
    "ensemble_stats", "entropy_lognormal", "fit_lognormal", "kl_lognormal", "sample_prior",
    "sequential_assimilate_all", "step_reward",
]
