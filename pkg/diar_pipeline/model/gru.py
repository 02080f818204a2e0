"""Gated recurrent unit used as the per-speaker centroid tracker."""
import torch
import torch.nn as nn


class GateParams(nn.Module):
    """``W x + U h + b`` for one gate; W, U are D x D."""

    def __init__(self, input_size: int, hidden_size: int):
        super().__init__()
        self.W = nn.Parameter(torch.zeros(hidden_size, input_size))
        self.U = nn.Parameter(torch.zeros(hidden_size, hidden_size))
        self.b = nn.Parameter(torch.zeros(hidden_size))

    def forward(self, x: torch.Tensor, h: torch.Tensor) -> torch.Tensor:
        return self.W @ x + self.U @ h + self.b


class GruCell(nn.Module):
    """
    Single-vector GRU step:

        z  = sigmoid(W_z x + U_z h + b_z)
        r  = sigmoid(W_r x + U_r h + b_r)
        h~ = tanh(W_h x + U_h (r * h) + b_h)
        h' = (1 - z) * h + z * h~
    """

    def __init__(self, input_size: int, hidden_size: int):
        super().__init__()
        self.update = GateParams(input_size, hidden_size)
        self.reset = GateParams(input_size, hidden_size)
        self.candidate = GateParams(input_size, hidden_size)

    def forward(self, x: torch.Tensor, h: torch.Tensor) -> torch.Tensor:
        z = torch.sigmoid(self.update(x, h))
        r = torch.sigmoid(self.reset(x, h))
        h_tilde = torch.tanh(self.candidate(x, r * h))
        return (1 - z) * h + z * h_tilde
