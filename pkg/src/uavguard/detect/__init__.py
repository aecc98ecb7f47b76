from .data import (
    background_from_states,
    build_cnn_dataset,
    build_lstm_dataset,
    collect_states,
    dataset_hash,
)
from .eval import (
    EvalReport,
    evaluate_detectors,
    latency_bench,
    report_from_scores,
    walk_payloads,
)
from .nets import WINDOW, build_cnn_ad, build_detector, build_fcn_ad, build_lstm_ad
from .train import DetectorDiverged, accuracy, bce_loss, score, stratified_split, train_detector
