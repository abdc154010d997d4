"""Neural lower-bound estimation of mutual information between symbol pairs.

The estimator trains a small statistics network T on (sent, received)
samples and evaluates the Donsker-Varadhan bound

    I(X;Y) >= E[T(x, y)] - ln E[exp T(x, y')]

with y' drawn by shuffling the pairing.  The plain gradient of the
second term is biased by the moving batch estimate in its denominator,
so updates divide by an exponential moving average of E[exp T] instead;
the reported value still uses the exact batch statistic.

Estimates are clipped to [0, ln batch]: the empirical bound cannot
resolve more information than distinguishing the batch's own pairings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

MIN_BATCH = 32


@dataclass
class MineConfig:
    hidden_width: int = 128
    lr: float = 1e-3
    ema_decay: float = 0.99


class StatisticsNetwork(nn.Module):
    def __init__(self, input_dim: int, hidden_width: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(input_dim, hidden_width),
            nn.ReLU(),
            nn.Linear(hidden_width, hidden_width),
            nn.ReLU(),
            nn.Linear(hidden_width, 1),
        )

    def forward(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat([x, y], dim=-1)).squeeze(-1)


class MineEstimator:
    """Owns a statistics network, its optimizer, and the debiasing average."""

    def __init__(self, x_dim: int, y_dim: int, config: MineConfig | None = None, seed: int = 0):
        self.config = config or MineConfig()
        torch.manual_seed(seed)
        self.net = StatisticsNetwork(x_dim + y_dim, self.config.hidden_width)
        self.optimizer = torch.optim.Adam(self.net.parameters(), lr=self.config.lr)
        self.ema_denominator: float | None = None
        self._perm_generator = torch.Generator().manual_seed(seed + 1)
        self.x_dim = x_dim
        self.y_dim = y_dim

    def _check_batch(self, x: torch.Tensor, y: torch.Tensor) -> int:
        if x.shape[0] != y.shape[0]:
            raise ValueError("paired samples must have equal batch sizes")
        if x.shape[0] < MIN_BATCH:
            raise ValueError(
                f"batch of {x.shape[0]} is too small for a stable bound "
                f"(need at least {MIN_BATCH})"
            )
        return x.shape[0]

    def _terms(self, x: torch.Tensor, y: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        perm = torch.randperm(x.shape[0], generator=self._perm_generator)
        joint = self.net(x, y).mean()
        denominator = torch.exp(self.net(x, y[perm])).mean()
        return joint, denominator

    def dv_bound(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        """Differentiable bound value; gradients flow into x and y too."""
        self._check_batch(x, y)
        joint, denominator = self._terms(x, y)
        return joint - torch.log(denominator)

    def update(self, x: torch.Tensor, y: torch.Tensor) -> float:
        """One optimization step on detached samples; returns the clipped bound."""
        batch = self._check_batch(x, y)
        x = x.detach()
        y = y.detach()
        joint, denominator = self._terms(x, y)

        value = float(joint.detach() - torch.log(denominator.detach()))
        if self.ema_denominator is None:
            self.ema_denominator = float(denominator.detach())
        else:
            decay = self.config.ema_decay
            self.ema_denominator = decay * self.ema_denominator + (1 - decay) * float(
                denominator.detach()
            )

        # Debiased surrogate: d/dtheta of denominator is rescaled by the
        # moving average rather than the noisy batch denominator.
        surrogate = -(joint - denominator / self.ema_denominator)
        self.optimizer.zero_grad()
        surrogate.backward()
        self.optimizer.step()
        return _clip_estimate(value, batch)

    @torch.no_grad()
    def estimate(self, x: torch.Tensor, y: torch.Tensor, n_shuffles: int = 4) -> float:
        """Evaluate the bound without touching the network, averaging shuffles."""
        batch = self._check_batch(x, y)
        joint = self.net(x, y).mean()
        denominators = []
        for _ in range(n_shuffles):
            perm = torch.randperm(batch, generator=self._perm_generator)
            denominators.append(torch.exp(self.net(x, y[perm])).mean())
        value = float(joint - torch.log(torch.stack(denominators).mean()))
        return _clip_estimate(value, batch)

    def state_dict(self) -> dict:
        return {
            "net": self.net.state_dict(),
            "ema_denominator": self.ema_denominator,
            "x_dim": self.x_dim,
            "y_dim": self.y_dim,
        }

    def load_state_dict(self, state: dict) -> None:
        self.net.load_state_dict(state["net"])
        self.ema_denominator = state["ema_denominator"]


def _clip_estimate(value: float, batch: int) -> float:
    return min(max(value, 0.0), math.log(batch))
