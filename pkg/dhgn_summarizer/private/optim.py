#
# MIT License
#
# (C) Copyright [2024] Hewlett Packard Enterprise Development LP
#
# Permission is hereby granted, free of charge, to any person obtaining a
# copy of this software and associated documentation files (the "Software"),
# to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense,
# and/or sell copies of the Software, and to permit persons to whom the
# Software is furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included
# in all copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL
# THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR
# OTHER LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE,
# ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR
# OTHER DEALINGS IN THE SOFTWARE.
"""Adam and global norm gradient clipping over Parameters.

"""
import math

import numpy as np

from .common import ValidationError


def global_norm(params):
    """L2 norm of all gradients taken together.

    """
    return math.sqrt(
        math.fsum(float(np.sum(param.grad * param.grad)) for param in params)
    )


def clip_grad_norm(params, max_norm):
    """Rescale every gradient in place so that their global norm is at
    most 'max_norm'. Returns the norm before clipping.

    """
    if not max_norm > 0:
        raise ValidationError(
            "max gradient norm must be positive, got %s" % str(max_norm)
        )
    norm = global_norm(params)
    if not math.isfinite(norm):
        raise ValidationError("non-finite gradient norm %r" % norm)
    if norm > max_norm:
        scale = max_norm / norm
        for param in params:
            param.grad[...] *= scale
    return norm


class Adam:
    """Adam with bias corrected moments.

    """
    def __init__(self, params, lr=0.001, betas=(0.9, 0.999), eps=1e-8):
        """Constructor

        """
        if not lr > 0:
            raise ValidationError("learning rate must be positive")
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.steps = 0
        self.first = {
            param.name: np.zeros_like(param.data) for param in self.params
        }
        self.second = {
            param.name: np.zeros_like(param.data) for param in self.params
        }

    def zero_grad(self):
        """Reset every parameter's gradient.

        """
        for param in self.params:
            param.zero_grad()

    def step(self):
        """Apply one update from the accumulated gradients.

        """
        self.steps += 1
        correction1 = 1.0 - self.beta1 ** self.steps
        correction2 = 1.0 - self.beta2 ** self.steps
        for param in self.params:
            first = self.first[param.name]
            second = self.second[param.name]
            first *= self.beta1
            first += (1.0 - self.beta1) * param.grad
            second *= self.beta2
            second += (1.0 - self.beta2) * param.grad * param.grad
            param.data[...] -= self.lr * (first / correction1) / (
                np.sqrt(second / correction2) + self.eps
            )
