"""Embedding-space adversarial perturbations for fine-tuning.

FGM takes one gradient-direction step of norm epsilon on the word
embeddings; PGD iterates smaller alpha steps, projecting back onto the
epsilon-ball after each one and accumulating gradients. Both restore the
embeddings bit-exactly afterwards.
"""

from __future__ import annotations

import torch

from .config import AdapterConfig

WORD_EMBEDDING_FRAGMENTS = ("word_embeddings", "shared.weight", "embed_tokens")


def _attackable(model, param_filter):
    for name, param in model.named_parameters():
        if param.requires_grad and any(f in name for f in param_filter):
            yield name, param


class FGM:
    def __init__(self, model, epsilon: float, param_filter=WORD_EMBEDDING_FRAGMENTS):
        self.model = model
        self.epsilon = epsilon
        self.param_filter = param_filter
        self._backup: dict[str, torch.Tensor] = {}

    def attack(self):
        for name, param in _attackable(self.model, self.param_filter):
            if param.grad is None:
                continue
            self._backup[name] = param.data.clone()
            norm = torch.norm(param.grad)
            if norm != 0 and torch.isfinite(norm):
                param.data.add_(self.epsilon * param.grad / norm)

    def restore(self):
        for name, param in _attackable(self.model, self.param_filter):
            if name in self._backup:
                param.data.copy_(self._backup[name])
        self._backup = {}


class PGD:
    def __init__(self, model, epsilon: float, alpha: float, param_filter=WORD_EMBEDDING_FRAGMENTS):
        self.model = model
        self.epsilon = epsilon
        self.alpha = alpha
        self.param_filter = param_filter
        self._origin: dict[str, torch.Tensor] = {}
        self._grads: dict[str, torch.Tensor] = {}

    def attack(self, first: bool):
        for name, param in _attackable(self.model, self.param_filter):
            if param.grad is None:
                continue
            if first:
                self._origin[name] = param.data.clone()
            norm = torch.norm(param.grad)
            if norm != 0 and torch.isfinite(norm):
                param.data.add_(self.alpha * param.grad / norm)
            delta = param.data - self._origin[name]
            delta_norm = torch.norm(delta)
            if delta_norm > self.epsilon:
                param.data.copy_(self._origin[name] + self.epsilon * delta / delta_norm)

    def restore(self):
        for name, param in _attackable(self.model, self.param_filter):
            if name in self._origin:
                param.data.copy_(self._origin[name])
        self._origin = {}

    def backup_grad(self):
        self._grads = {
            name: param.grad.clone()
            for name, param in self.model.named_parameters()
            if param.requires_grad and param.grad is not None
        }

    def restore_grad(self):
        for name, param in self.model.named_parameters():
            if name in self._grads:
                param.grad = self._grads[name]
        self._grads = {}


def train_step(model, batch: dict, optimizer, config: AdapterConfig) -> dict:
    """One optimization step: clean pass plus the configured adversarial pass."""
    optimizer.zero_grad()
    loss = model(**batch).loss
    loss.backward()
    metrics = {"loss": loss.detach().item()}

    if config.adversarial == "fgm":
        fgm = FGM(model, config.epsilon)
        fgm.attack()
        adversarial_loss = model(**batch).loss
        adversarial_loss.backward()
        fgm.restore()
        metrics["adversarial_loss"] = adversarial_loss.detach().item()
    elif config.adversarial == "pgd":
        pgd = PGD(model, config.epsilon, config.pgd_alpha)
        pgd.backup_grad()
        for step in range(config.pgd_steps):
            pgd.attack(first=step == 0)
            if step != config.pgd_steps - 1:
                model.zero_grad()
            else:
                pgd.restore_grad()
            adversarial_loss = model(**batch).loss
            adversarial_loss.backward()
        pgd.restore()
        metrics["adversarial_loss"] = adversarial_loss.detach().item()

    optimizer.step()
    return metrics
