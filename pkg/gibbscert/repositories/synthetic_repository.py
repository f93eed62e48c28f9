"""
Synthetic posteriors for simulation.

A SyntheticPosteriorSpec fixes per-example mean losses p_0..p_{m-1}; the
posterior is then simulated so that E_{H~rho}[loss(H, z_j)] = p_j exactly,
which makes the Gibbs risk L_s(rho) = mean(p) known in closed form:

- bernoulli-per-example: loss(H_t, z_j) ~ Bernoulli(p_j), independent over (t, j)
- beta-loss: loss(H_t, z_j) ~ Beta(k p_j, k (1 - p_j)) with concentration k
- point-mass: a single hypothesis with loss(h, z_j) = p_j

All randomness is read from counter streams keyed by (seed, t, j), so a
hypothesis handle is just its draw index and evaluation order is irrelevant.
"""

from dataclasses import dataclass
from typing import Any, Dict, Hashable, Optional, Tuple

from ..models import SyntheticKind, SyntheticPosteriorSpec
from ..utils.seeding import (DATA_STREAM, POSTERIOR_STREAM, counter_stream,
                             counter_uniform, validate_seed)
from .base_repository import (DatasetHandle, InMemoryDataset, LossOracle,
                              PosteriorSampler)


@dataclass(frozen=True)
class SyntheticHypothesis:
    """Handle of one posterior draw: the randomness it owns is addressed by (seed, t)."""

    seed: int
    t: int


class SyntheticDataset(DatasetHandle):
    """The fixed dataset of a synthetic spec; token j is the example index itself."""

    def __init__(self, spec: SyntheticPosteriorSpec):
        super().__init__()
        self.spec = spec

    @property
    def repository_name(self) -> str:
        return "SyntheticDataset"

    @property
    def thread_safe(self) -> bool:
        return True

    @property
    def size(self) -> int:
        return self.spec.m

    def example(self, j: int) -> Hashable:
        self.check_index(j)
        return j

    def describe(self) -> Optional[Dict[str, Any]]:
        return {"source": "synthetic", "spec": self.spec.model_dump(mode="json")}

    def sample_stream(self, size: int, seed: int) -> InMemoryDataset:
        """
        Draw `size` fresh i.i.d. examples from Uniform(s).

        Used as the held-out data-generating distribution for test-set bounds;
        the out-of-sample Gibbs risk of that distribution is spec.gibbs_risk.
        """
        seed = validate_seed(seed)
        indices = counter_stream(seed, 0, 0, DATA_STREAM).integers(0, self.size, size=size)
        tokens = [int(j) for j in indices]
        self.log_operation("sample_stream", {"size": size, "seed": seed})
        return InMemoryDataset(
            tokens,
            description={
                "source": "synthetic-stream",
                "spec": self.spec.model_dump(mode="json"),
                "size": size,
                "seed": seed,
            },
        )


class SyntheticPosteriorSampler(PosteriorSampler):
    def __init__(self, spec: SyntheticPosteriorSpec, seed: int):
        super().__init__()
        self.spec = spec
        self._seed = validate_seed(seed)

    @property
    def repository_name(self) -> str:
        return "SyntheticPosteriorSampler"

    @property
    def thread_safe(self) -> bool:
        return True

    @property
    def seed(self) -> int:
        return self._seed

    def draw(self, t: int) -> SyntheticHypothesis:
        if self.spec.kind == SyntheticKind.POINT_MASS:
            return SyntheticHypothesis(seed=self._seed, t=0)
        return SyntheticHypothesis(seed=self._seed, t=t)


class SyntheticLossOracle(LossOracle):
    def __init__(self, spec: SyntheticPosteriorSpec):
        super().__init__()
        self.spec = spec

    @property
    def repository_name(self) -> str:
        return "SyntheticLossOracle"

    @property
    def thread_safe(self) -> bool:
        return True

    def loss(self, hypothesis: SyntheticHypothesis, example: Hashable) -> float:
        j = int(example)
        mean = self.spec.means[j]
        if self.spec.kind == SyntheticKind.POINT_MASS or mean in (0.0, 1.0):
            return mean
        if self.spec.kind == SyntheticKind.BERNOULLI_PER_EXAMPLE:
            u = counter_uniform(hypothesis.seed, hypothesis.t, j, POSTERIOR_STREAM)
            return 1.0 if u < mean else 0.0
        rng = counter_stream(hypothesis.seed, hypothesis.t, j, POSTERIOR_STREAM)
        k = self.spec.concentration
        return float(rng.beta(k * mean, k * (1.0 - mean)))


def build_synthetic(
    spec: SyntheticPosteriorSpec, seed: int
) -> Tuple[SyntheticDataset, SyntheticPosteriorSampler, SyntheticLossOracle]:
    """Dataset, sampler and oracle simulating the posterior described by spec."""
    return (
        SyntheticDataset(spec),
        SyntheticPosteriorSampler(spec, seed),
        SyntheticLossOracle(spec),
    )
