"""
Mini-batch training loop with Adam, validation tracking and best-checkpoint selection
"""

import csv
import time
from typing import Tuple, Callable, Optional
import numpy as np

from models.cnn_models import Model, TrainConfig, AdamState, EpochRecord, TrainingHistory, TrainResult
from services import cnn_layers as L
from services.cnn_model import forward, loss_and_gradients
from services.optimizer import adam_step
from utils.error_handlers import DatasetError, DivergenceError
from utils.logging_config import get_logger

logger = get_logger('training')

EVAL_BATCH = 64

Split = Tuple[np.ndarray, np.ndarray]


def _check_split(name: str, data: Split, model: Model):
    images, labels = data
    if images.shape[0] == 0:
        raise DatasetError(f"The {name} split is empty")
    if images.shape[0] != labels.shape[0]:
        raise DatasetError(f"The {name} split has {images.shape[0]} images but {labels.shape[0]} labels")
    if labels.min() < 0 or labels.max() >= model.num_classes:
        raise DatasetError(f"The {name} split has labels outside 0..{model.num_classes - 1}")


def evaluate_split(model: Model, data: Split) -> Tuple[float, float]:
    """Mean loss and accuracy over a split"""
    images, labels = data
    total_loss, correct = 0.0, 0
    for start in range(0, images.shape[0], EVAL_BATCH):
        batch_x = images[start:start + EVAL_BATCH]
        batch_y = labels[start:start + EVAL_BATCH]
        probs, _, _ = forward(model, batch_x)
        loss, _ = L.cce_loss(probs, L.one_hot(batch_y, model.num_classes))
        total_loss += loss * batch_x.shape[0]
        correct += int(np.sum(np.argmax(probs, axis=1) == batch_y))
    return total_loss / images.shape[0], correct / images.shape[0]


def train(model: Model, train_data: Split, val_data: Split, config: TrainConfig,
          on_epoch: Optional[Callable[[EpochRecord], None]] = None) -> TrainResult:
    """
    Seeded shuffled mini-batch loop. The returned model is the one with the
    best validation accuracy (earliest on ties); with zero epochs it is the
    initial model.
    """
    config.validate()
    _check_split('train', train_data, model)
    _check_split('validation', val_data, model)

    images, labels = train_data
    rng = np.random.default_rng(config.seed)
    state = AdamState.zeros_like(model.parameter_arrays())
    history = TrainingHistory()
    best_model, best_state = model.copy(), _copy_state(state)

    logger.info(
        f"TRAINING_START - Train: {images.shape[0]} - Val: {val_data[0].shape[0]} - "
        f"Epochs: {config.epochs} - Batch: {config.batch_size} - LR: {config.learning_rate} - Seed: {config.seed}"
    )
    for epoch in range(1, config.epochs + 1):
        start_time = time.perf_counter()
        order = rng.permutation(images.shape[0])
        epoch_loss, correct = 0.0, 0
        for batch_index, start in enumerate(range(0, images.shape[0], config.batch_size)):
            idx = order[start:start + config.batch_size]
            targets = L.one_hot(labels[idx], model.num_classes)
            loss, grads, probs = loss_and_gradients(model, images[idx], targets)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
                logger.error(f"TRAINING_DIVERGED - Epoch: {epoch} - Batch: {batch_index} - Loss: {loss}",
                             extra={'epoch': epoch, 'batch': batch_index})
                raise DivergenceError(
                    f"Training diverged at epoch {epoch}, batch {batch_index} (loss={loss})",
                    epoch=epoch, batch=batch_index
                )
            adam_step(model.parameter_arrays(), grads, state, config)
            epoch_loss += loss * idx.shape[0]
            correct += int(np.sum(np.argmax(probs, axis=1) == labels[idx]))

        val_loss, val_acc = evaluate_split(model, val_data)
        record = EpochRecord(epoch=epoch, train_loss=epoch_loss / images.shape[0],
                             val_loss=val_loss, val_acc=val_acc, train_acc=correct / images.shape[0])
        history.records.append(record)
        if history.best_val_acc is None or val_acc > history.best_val_acc:
            history.best_epoch, history.best_val_acc = epoch, val_acc
            best_model, best_state = model.copy(), _copy_state(state)

        elapsed_ms = (time.perf_counter() - start_time) * 1000
        logger.info(
            f"EPOCH_COMPLETE - Epoch: {epoch} - Train loss: {record.train_loss:.4f} - "
            f"Train acc: {record.train_acc:.4f} - Val loss: {val_loss:.4f} - Val acc: {val_acc:.4f} - "
            f"Time: {elapsed_ms:.0f}ms",
            extra={'epoch': epoch, 'elapsed_ms': elapsed_ms}
        )
        if on_epoch is not None:
            on_epoch(record)

    logger.info(f"TRAINING_COMPLETE - Best epoch: {history.best_epoch} - Best val acc: {history.best_val_acc}")
    return TrainResult(model=best_model, optimizer_state=best_state, history=history)


def _copy_state(state: AdamState) -> AdamState:
    return AdamState(
        first_moment=[m.copy() for m in state.first_moment],
        second_moment=[v.copy() for v in state.second_moment],
        step=state.step
    )


def write_history_csv(history: TrainingHistory, path: str) -> str:
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh)
        writer.writerow(TrainingHistory.CSV_HEADER)
        for epoch, train_loss, val_loss, val_acc in history.csv_rows():
            writer.writerow([epoch, repr(train_loss), repr(val_loss), repr(val_acc)])
    return path
