from .config import ConfigError, Experiment, validate_config
from .logs import observations_from_log, read_ndjson, step_record, write_ndjson
from .manifest import RunManifest, config_hash, file_hash, report_hashes
from .seeds import derive_seed, seed_sequence, stream
from .stages import STAGES, MissingPrerequisite, load_actor, reproduce
