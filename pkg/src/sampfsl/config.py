"""Run configuration: flat ``key = value`` text files with strict keys.

Unknown keys are rejected by name. The ``SAMP_SEED`` environment variable,
when set, overrides the configured seed.
"""

import os
from dataclasses import dataclass, fields

from sampfsl.episodes import EvalProtocol
from sampfsl.ot import SinkhornConfig
from sampfsl.pretrain import AugmentationSpec, ModelShape, PretrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # paths
    dataset: str = ""
    checkpoint: str = "checkpoint"
    history: str = "history.jsonl"
    report: str = "report.json"
    plot_csv: str = ""  # (epoch, loss) CSV; empty derives from the history path
    episode_log: str = ""  # optional per-episode accuracy JSONL; empty disables
    # randomness
    seed: int = 0
    # model
    input_dim: int = 32
    hidden_dim: int = 64
    embed_dim: int = 32
    samp_steps: int = 1
    samp_heads: int = 4
    # pre-training
    sources: int = 16
    augments: int = 3
    beta: float = 0.7
    eta: float = 1e-3
    gamma: float = 0.0
    epochs: int = 50
    optimizer: str = "adam"
    checkpoint_every: int = 0  # epochs between intermediate checkpoints; 0 = final only
    # augmentation
    jitter_sigma: float = 0.1
    scale_lo: float = 0.9
    scale_hi: float = 1.1
    mask_fraction: float = 0.1
    # optimal transport
    epsilon: float = 0.05
    sinkhorn_max_iterations: int = 1000
    sinkhorn_tolerance: float = 1e-9
    # evaluation protocol
    n_way: int = 5
    k_shot: int = 1
    q_queries: int = 15
    episodes: int = 600
    ot_enabled: bool = True
    finetune_iters: int = 15
    finetune_lr: float = 0.01

    def pretrain_config(self) -> PretrainConfig:
        return PretrainConfig(
            sources=self.sources,
            augments=self.augments,
            beta=self.beta,
            eta=self.eta,
            gamma=self.gamma,
            epochs=self.epochs,
            optimizer=self.optimizer,
            seed=self.seed,
        )

    def augmentation_spec(self) -> AugmentationSpec:
        return AugmentationSpec(
            jitter_sigma=self.jitter_sigma,
            scale_range=(self.scale_lo, self.scale_hi),
            mask_fraction=self.mask_fraction,
        )

    def model_shape(self) -> ModelShape:
        return ModelShape(
            hidden_dims=(self.hidden_dim,),
            embed_dim=self.embed_dim,
            samp_steps=self.samp_steps,
            samp_heads=self.samp_heads,
        )

    def sinkhorn_config(self) -> SinkhornConfig:
        return SinkhornConfig(
            epsilon=self.epsilon,
            max_iterations=self.sinkhorn_max_iterations,
            tolerance=self.sinkhorn_tolerance,
        )

    def protocol(self) -> EvalProtocol:
        return EvalProtocol(
            n_way=self.n_way,
            k_shot=self.k_shot,
            q_queries=self.q_queries,
            episodes=self.episodes,
            ot_enabled=self.ot_enabled,
            finetune_iters=self.finetune_iters,
            finetune_lr=self.finetune_lr,
        )


_FIELDS = {
    f.name: f.type if isinstance(f.type, str) else f.type.__name__ for f in fields(RunConfig)
}


def _parse_value(key: str, raw: str, ftype: str):
    try:
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        if ftype == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"config key {key}: cannot parse {raw!r} as {ftype}") from exc


def parse_config(text: str) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key: {key}")
        if key in values:
            raise ConfigError(f"duplicate config key: {key}")
        values[key] = _parse_value(key, raw, _FIELDS[key])
    return RunConfig(**values)


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for name, ftype in _FIELDS.items():
        v = getattr(cfg, name)
        if ftype == "bool":
            raw = "true" if v else "false"
        elif ftype == "float":
            raw = repr(v)
        else:
            raw = str(v)
        lines.append(f"{name} = {raw}\n")
    return "".join(lines)


def load_config(path, env=None) -> RunConfig:
    env = os.environ if env is None else env
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(text)
    if "SAMP_SEED" in env:
        try:
            cfg.seed = int(env["SAMP_SEED"])
        except ValueError as exc:
            raise ConfigError(f"SAMP_SEED must be an integer, got {env['SAMP_SEED']!r}") from exc
    return cfg
