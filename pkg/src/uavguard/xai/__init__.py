from .deeplift import (
    AttributionFrame,
    Background,
    UnsupportedLayerError,
    deep_attribution,
    make_background,
)
from .exact import MAX_FEATURES, exact_shapley, linear_shapley
from .images import shap_image
from .records import array_hash, model_hash, read_records, write_records
from .split import GRU_FEED, SplitModel, YAW_HEAD, gru_background, gru_layer_shap, split_actor
from .trace import episode_shap_trace, write_trace
