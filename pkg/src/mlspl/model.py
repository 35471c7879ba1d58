"""End-to-end model: scaling, alternating training, code prediction, checkpoints."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import Dataset, Scaler
from .predictor import CodePredictor, decide, fit_code_predictor, predict_codes, score
from .trainer import ModelState, TrainConfig, fit

CHECKPOINT_FORMAT = "mlspl-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class TrainedModel:
    config: TrainConfig
    scaler: Scaler
    state: ModelState
    code_predictor: CodePredictor | None
    feature_names: list
    label_names: list

    def scores(self, features) -> np.ndarray:
        X = self.scaler.transform(np.atleast_2d(features))
        q_hat = predict_codes(self.code_predictor, X) if self.code_predictor else None
        return score(self.state.W, self.state.b, X, q_hat)

    def predict(self, features) -> np.ndarray:
        return decide(self.scores(features))


def train_model(ds: Dataset, cfg: TrainConfig, *, trace=None) -> TrainedModel:
    scaler = Scaler.fit(ds.features) if cfg.standardize else Scaler.identity(ds.d)
    X = scaler.transform(ds.features)
    state = fit(X, ds.labels, cfg, trace=trace)
    cp = fit_code_predictor(X, state.Q, cfg.code_ridge) if state.Q.shape[0] else None
    return TrainedModel(cfg, scaler, state, cp, list(ds.feature_names), list(ds.label_names))


def _arr(a):
    return np.asarray(a, float).tolist()


def checkpoint_dict(model: TrainedModel) -> dict:
    s = model.state
    cp = model.code_predictor
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "toolkit_version": __version__,
        "config": model.config.to_dict(),
        "feature_names": model.feature_names,
        "label_names": model.label_names,
        "scaler": {"mean": _arr(model.scaler.mean), "scale": _arr(model.scaler.scale)},
        "state": {
            "W": _arr(s.W), "b": _arr(s.b), "Q": _arr(s.Q), "A": _arr(s.A), "V": _arr(s.V),
            "lam": s.lam, "iteration": s.iteration, "saturated": s.saturated,
            "history": s.history,
        },
        "code_predictor": None if cp is None else {
            "coef": _arr(cp.coef), "intercept": _arr(cp.intercept), "ridge": cp.ridge},
    }


def _mat(rows, shape0, shape1):
    a = np.asarray(rows, float)
    return a.reshape(shape0, shape1)


def model_from_dict(data: dict) -> TrainedModel:
    if data.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not an mlspl checkpoint")
    if data.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {data.get('version')}")
    cfg = TrainConfig.from_dict(data["config"])
    d = len(data["feature_names"])
    L = len(data["label_names"])
    m = cfg.n_codes
    st = data["state"]
    n = len(st["V"])
    state = ModelState(
        W=_mat(st["W"], d + m, L), b=np.asarray(st["b"], float),
        Q=_mat(st["Q"], m, n), A=_mat(st["A"], L, m), V=_mat(st["V"], n, L),
        lam=float(st["lam"]), iteration=int(st["iteration"]),
        saturated=bool(st["saturated"]), history=list(st["history"]),
    )
    cpd = data["code_predictor"]
    cp = None if cpd is None else CodePredictor(
        _mat(cpd["coef"], d, m), np.asarray(cpd["intercept"], float), float(cpd["ridge"]))
    scaler = Scaler(np.asarray(data["scaler"]["mean"], float),
                    np.asarray(data["scaler"]["scale"], float))
    return TrainedModel(cfg, scaler, state, cp, data["feature_names"], data["label_names"])


def save_checkpoint(model: TrainedModel, path) -> None:
    Path(path).write_text(json.dumps(checkpoint_dict(model), indent=1, sort_keys=True) + "\n")


def load_checkpoint(path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text()))
