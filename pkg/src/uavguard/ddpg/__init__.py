from .agent import DdpgAgent, OUNoise, clip_gradients
from .nets import (
    GRU_UNITS,
    action_feature,
    batch_feeds,
    build_actor,
    build_critic,
    obs_to_feeds,
    pos_features,
)
from .replay import BufferNotReady, FrameStore, ReplayBuffer, SumTree
from .train import (
    EpisodeRecord,
    TrainConfig,
    TrainingDiverged,
    evaluate,
    run_episode,
    train,
    write_training_log,
)
