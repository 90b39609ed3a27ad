"""Contact simulation: membrane geometry, masks, signatures, datasets."""

from .dataset import (AmbiguityFlags, DatasetConfig, ObjectSpec, PoseDraw,
                      PoseSampler, SampleRecord, SensorConfig, generate_dataset,
                      load_manifest, load_record, load_split_arrays,
                      place_object, rebuild_camera, rebuild_objects,
                      rebuild_sensor, sample_ids, simulate_sample)
from .mask import ContactMask, compute_contact_mask, in_contact_depth
from .membrane import (MembraneParams, make_bubble_membrane,
                       membrane_surface_height, membrane_visible_surface)
from .signature import SimNoiseConfig, synth_tactile_signature

__all__ = [
    "AmbiguityFlags", "ContactMask", "DatasetConfig", "MembraneParams",
    "ObjectSpec", "PoseDraw", "PoseSampler", "SampleRecord", "SensorConfig",
    "SimNoiseConfig", "compute_contact_mask", "generate_dataset",
    "in_contact_depth", "load_manifest", "load_record", "load_split_arrays",
    "make_bubble_membrane", "membrane_surface_height",
    "membrane_visible_surface", "place_object", "rebuild_camera",
    "rebuild_objects", "rebuild_sensor", "sample_ids", "simulate_sample",
    "synth_tactile_signature",
]
