from .checkpoint import Checkpoint, CheckpointError, make_autoencoder_checkpoint
from .gradcheck import finite_diff_check
from .losses import chamfer_loss_and_grad, logistic_loss, softmax_cross_entropy
from .models import (BinaryClassifier, ClassifierArch, Decoder, DecoderArch,
                     Encoder, EncoderArch, Segmenter, SegmenterArch,
                     ShapeMismatch)
from .train import (TrainConfig, TrainingDiverged, classify_clouds,
                    decode_latents, encode_clouds, segment_points,
                    segmenter_accuracy, train_autoencoder, train_classifier,
                    train_segmenter)

__all__ = [
    "BinaryClassifier", "Checkpoint", "CheckpointError", "ClassifierArch",
    "Decoder", "DecoderArch", "Encoder", "EncoderArch", "Segmenter",
    "SegmenterArch", "ShapeMismatch", "TrainConfig", "TrainingDiverged",
    "chamfer_loss_and_grad", "classify_clouds", "decode_latents",
    "encode_clouds", "finite_diff_check", "logistic_loss",
    "make_autoencoder_checkpoint", "segment_points", "segmenter_accuracy",
    "softmax_cross_entropy", "train_autoencoder", "train_classifier",
    "train_segmenter",
]
