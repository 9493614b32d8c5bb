"""Two-path training and inference orchestration.

Training decodes with searched textures and simultaneously supervises the
texture generator on them; inference decodes with generated textures and
needs no reference image. One Adam optimizer drives the generator side
with three learning-rate groups (ltg / encoder / rest), a second one
drives the critic. All randomness flows from three named seeds (data,
init, gan) through numpy generators, so runs are bit-reproducible and
checkpoints resume exactly.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import torch

from .checkpoint import load_model_params, model_blobs, read_checkpoint, write_checkpoint
from .errors import TrainingDivergedError
from .losses import (LossWeights, critic_loss, generator_adv_loss, gradient_penalty,
                     perceptual_loss, rec_loss, texture_gen_loss, total_loss)
from .model import ModelConfig, SRModel
from .tensorops import stack_images, to_image, to_tensor


@dataclass
class TrainSeeds:
    data: int = 0
    init: int = 1
    gan: int = 2


@dataclass
class TrainConfig:
    epochs: int = 200
    batch: int = 4
    crop: int = 64
    lr_ltg: float = 1e-4
    lr_encoder: float = 1e-6
    lr_rest: float = 5e-5
    decay_factor: float = 0.7
    decay_every: int = 100
    critic_steps: int = 1
    weights: LossWeights = field(default_factory=LossWeights)
    seeds: TrainSeeds = field(default_factory=TrainSeeds)
    checkpoint_every: int = 0  # epochs between snapshots; 0 = final only

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.crop % 16:
            raise ValueError(f"crop must be divisible by 16, got {self.crop}")
        if min(self.lr_ltg, self.lr_encoder, self.lr_rest) <= 0:
            raise ValueError("learning rates must be > 0")
        if not 0 < self.decay_factor <= 1:
            raise ValueError("decay_factor must be in (0, 1]")
        if self.critic_steps < 0:
            raise ValueError("critic_steps must be >= 0")


def model_config_from_dict(d):
    d = dict(d)
    d["channels"] = tuple(d["channels"])
    d["critic_channels"] = tuple(d["critic_channels"])
    return ModelConfig(**d)


def train_config_from_dict(d):
    d = dict(d)
    d["weights"] = LossWeights(**d["weights"])
    d["seeds"] = TrainSeeds(**d["seeds"])
    return TrainConfig(**d)


class Trainer:
    def __init__(self, model_cfg: ModelConfig = None, cfg: TrainConfig = None):
        self.model_cfg = model_cfg or ModelConfig()
        self.cfg = cfg or TrainConfig()
        self.model = SRModel(self.model_cfg).init_params(self.cfg.seeds.init)
        self._gen_named = [
            [(n, p) for n, p in self.model.named_parameters()
             if n.startswith(prefix) and p.requires_grad]
            for prefix in ("ltg.", "encoder.", "decoder.")
        ]
        self._critic_named = [(n, p) for n, p in self.model.named_parameters()
                              if n.startswith("critic.")]
        self._gen_base_lrs = (self.cfg.lr_ltg, self.cfg.lr_encoder, self.cfg.lr_rest)
        self.opt_gen = torch.optim.Adam(
            [{"params": [p for _, p in group], "lr": lr}
             for group, lr in zip(self._gen_named, self._gen_base_lrs)],
            betas=(0.9, 0.999), eps=1e-8,
        )
        self.opt_critic = torch.optim.Adam(
            [p for _, p in self._critic_named], lr=self.cfg.lr_rest,
            betas=(0.9, 0.999), eps=1e-8,
        )
        self.data_rng = np.random.default_rng(self.cfg.seeds.data)
        self.gan_rng = np.random.default_rng(self.cfg.seeds.gan)
        self.epoch = 0
        self.global_step = 0
        self.loss_log = []

    # -- schedule ----------------------------------------------------------

    def lr_factor(self, epoch: int) -> float:
        return self.cfg.decay_factor ** (epoch // self.cfg.decay_every)

    def current_lrs(self, epoch: int):
        f = self.lr_factor(epoch)
        return tuple(base * f for base in self._gen_base_lrs)

    def _apply_lr(self, epoch: int):
        f = self.lr_factor(epoch)
        for group, base in zip(self.opt_gen.param_groups, self._gen_base_lrs):
            group["lr"] = base * f
        for group in self.opt_critic.param_groups:
            group["lr"] = self.cfg.lr_rest * f

    # -- single optimization step ------------------------------------------

    def train_step(self, batch: dict) -> dict:
        """One critic/generator alternation on a batch of tensors
        {lr, hr, ref, ref_down}, each (B, 1, H, W). Returns the loss record."""
        lr, hr = batch["lr"], batch["hr"]
        w = self.cfg.weights
        f_lr, textures, relevance, _ = self.model.search(lr, batch["ref"], batch["ref_down"])
        sr = self.model.decoder(tuple(f_lr), textures, relevance, lr_image=lr, clamp=False)

        record = {"critic": 0.0, "gp": 0.0}
        if w.lambda_adv > 0:
            for _ in range(self.cfg.critic_steps):
                d_real = self.model.critic(hr)
                d_fake = self.model.critic(sr.detach())
                gp = gradient_penalty(self.model.critic, hr, sr.detach(), w.gp_lambda,
                                      seed=int(self.gan_rng.integers(0, 2**31)))
                l_critic = critic_loss(d_real, d_fake, gp)
                self.opt_critic.zero_grad()
                l_critic.backward()
                self.opt_critic.step()
                record["critic"] = float(l_critic)
                record["gp"] = float(gp)

        zero = sr.new_zeros(())
        l_rec = rec_loss(hr, sr)
        l_per = (perceptual_loss(hr, sr, textures, self.model.encoder, k=3)
                 if w.lambda_per > 0 else zero)
        if w.lambda_tg > 0:
            generated = self.model.ltg(tuple(f_lr))
            # searched textures and relevance are constant targets here: the
            # generator chases the searcher, never the other way around
            l_tg = texture_gen_loss([t.detach() for t in textures], generated,
                                    [r.detach() for r in relevance])
        else:
            l_tg = zero
        l_adv = (generator_adv_loss(self.model.critic(sr)) if w.lambda_adv > 0 else zero)
        total = total_loss(l_rec, l_per, l_tg, l_adv, w)

        self.opt_gen.zero_grad()
        total.backward()
        self.opt_gen.step()

        record.update(rec=float(l_rec), per=float(l_per), tg=float(l_tg),
                      adv=float(l_adv), total=float(total))
        if not all(np.isfinite(v) for v in record.values()):
            raise TrainingDivergedError(
                "non-finite loss at step "
                f"{self.global_step}: {json.dumps(record)}"
            )
        self.global_step += 1
        return record

    # -- data assembly -------------------------------------------------------

    def _assemble(self, dataset, indices) -> dict:
        crop = self.cfg.crop
        parts = {"lr": [], "hr": [], "ref": [], "ref_down": []}
        for i in indices:
            g = dataset[int(i)]
            h, w = g.hr.shape
            rh, rw = g.ref.shape
            if crop > min(h, w) or crop > min(rh, rw):
                raise ValueError(f"crop {crop} exceeds image dims {h}x{w}")
            y = int(self.data_rng.integers(0, h - crop + 1))
            x = int(self.data_rng.integers(0, w - crop + 1))
            ry = int(self.data_rng.integers(0, rh - crop + 1))
            rx = int(self.data_rng.integers(0, rw - crop + 1))
            parts["lr"].append(g.lr[y : y + crop, x : x + crop])
            parts["hr"].append(g.hr[y : y + crop, x : x + crop])
            parts["ref"].append(g.ref[ry : ry + crop, rx : rx + crop])
            parts["ref_down"].append(g.ref_down[ry : ry + crop, rx : rx + crop])
        return {k: stack_images(v) for k, v in parts.items()}

    # -- epoch loop ----------------------------------------------------------

    def fit(self, dataset, out_path=None, log_stream=None):
        """Run epochs self.epoch..cfg.epochs-1; returns the loss log."""
        if len(dataset) < 1:
            raise ValueError("dataset is empty")
        for epoch in range(self.epoch, self.cfg.epochs):
            self._apply_lr(epoch)
            order = self.data_rng.permutation(len(dataset))
            epoch_records = []
            for start in range(0, len(order), self.cfg.batch):
                batch = self._assemble(dataset, order[start : start + self.cfg.batch])
                rec = self.train_step(batch)
                self.loss_log.append(rec)
                epoch_records.append(rec)
            self.epoch = epoch + 1
            if log_stream is not None:
                means = {k: float(np.mean([r[k] for r in epoch_records]))
                         for k in epoch_records[0]}
                log_stream.write(json.dumps({"epoch": epoch, **means}) + "\n")
            if (out_path and self.cfg.checkpoint_every
                    and self.epoch % self.cfg.checkpoint_every == 0
                    and self.epoch < self.cfg.epochs):
                self.save(f"{out_path}.epoch{self.epoch}")
        if out_path:
            self.save(out_path)
        return self.loss_log

    # -- inference -----------------------------------------------------------

    def infer(self, lr_img) -> np.ndarray:
        """Reference-free super-resolution of one 2-D image."""
        with torch.no_grad():
            return to_image(self.model.sr_refless(to_tensor(lr_img)))

    def infer_with_ref(self, lr_img, ref_img, ref_down_img) -> np.ndarray:
        """Search-path super-resolution (evaluation harnesses only)."""
        if ref_img.shape != ref_down_img.shape:
            raise ValueError("ref/ref_down dims differ")
        with torch.no_grad():
            return to_image(
                self.model.sr_with_ref(to_tensor(lr_img), to_tensor(ref_img),
                                       to_tensor(ref_down_img))
            )

    # -- persistence ---------------------------------------------------------

    def save(self, path):
        blobs = model_blobs(self.model)
        optim_steps = {"gen": {}, "critic": {}}
        named_flat = [("gen", n, p) for group in self._gen_named for n, p in group]
        named_flat += [("critic", n, p) for n, p in self._critic_named]
        for group_name, name, p in named_flat:
            opt = self.opt_gen if group_name == "gen" else self.opt_critic
            state = opt.state.get(p)
            if state:
                blobs[f"optim/{group_name}/{name}/exp_avg"] = state["exp_avg"]
                blobs[f"optim/{group_name}/{name}/exp_avg_sq"] = state["exp_avg_sq"]
                optim_steps[group_name][name] = int(state["step"].item())
        meta = {
            "model_config": asdict(self.model_cfg),
            "train_config": asdict(self.cfg),
            "epoch": self.epoch,
            "step": self.global_step,
            "trained_steps": self.global_step,
            "rng": {"data": self.data_rng.bit_generator.state,
                    "gan": self.gan_rng.bit_generator.state},
            "optim_steps": optim_steps,
        }
        write_checkpoint(path, meta, blobs)
        return path

    @classmethod
    def load(cls, path):
        meta, blobs = read_checkpoint(path)
        trainer = cls(model_config_from_dict(meta["model_config"]),
                      train_config_from_dict(meta["train_config"]))
        load_model_params(trainer.model, blobs)
        named_flat = [("gen", n, p) for group in trainer._gen_named for n, p in group]
        named_flat += [("critic", n, p) for n, p in trainer._critic_named]
        for group_name, name, p in named_flat:
            key = f"optim/{group_name}/{name}/exp_avg"
            if key in blobs:
                opt = trainer.opt_gen if group_name == "gen" else trainer.opt_critic
                opt.state[p] = {
                    "step": torch.tensor(float(meta["optim_steps"][group_name][name])),
                    "exp_avg": torch.from_numpy(blobs[key]),
                    "exp_avg_sq": torch.from_numpy(blobs[f"optim/{group_name}/{name}/exp_avg_sq"]),
                }
        trainer.data_rng.bit_generator.state = meta["rng"]["data"]
        trainer.gan_rng.bit_generator.state = meta["rng"]["gan"]
        trainer.epoch = meta["epoch"]
        trainer.global_step = meta["step"]
        return trainer


def load_model(path):
    """Inference-only load: rebuild the model from a checkpoint."""
    meta, blobs = read_checkpoint(path)
    model = SRModel(model_config_from_dict(meta["model_config"]))
    load_model_params(model, blobs)
    return model, meta
