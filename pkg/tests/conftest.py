import numpy as np
import pytest

import carate as c


def make_constant_spec(m0=0.0, m1=0.0, s0=1.0, s1=1.0, k=1, ate=None):
    """Spec with constant means/scales; handy for analytic checks."""
    return c.PopulationSpec(
        dim_k=k,
        mean_fn=lambda a, z: np.full(z.shape[0], m1 if a == 1 else m0),
        scale_fn=lambda a, z: np.full(z.shape[0], s1 if a == 1 else s0),
        covariate_sampler=lambda rng, n: rng.uniform(-1.0, 1.0, size=(n, k)),
        noise_sampler=lambda rng, n: rng.standard_normal(n),
        true_ate=(m1 - m0) if ate is None else ate,
        name="constant",
    )


def make_linear_effect_spec():
    """k=1 spec with unit effect slope: m0 = 0, m1 = z, unit scales."""
    return c.PopulationSpec(
        dim_k=1,
        mean_fn=lambda a, z: z[:, 0].copy() if a == 1 else np.zeros(z.shape[0]),
        scale_fn=lambda a, z: np.ones(z.shape[0]),
        covariate_sampler=lambda rng, n: rng.uniform(-1.0, 1.0, size=(n, 1)),
        noise_sampler=lambda rng, n: rng.standard_normal(n),
        true_ate=0.0,
        name="linear-effect",
    )


@pytest.fixture
def small_frame():
    """The five-unit frame with strata (1,1,2,2,2), used by hand examples."""
    sample = c.PotentialSample(
        y0=np.array([9.0, 3.0, 9.0, 9.0, 4.0]),
        y1=np.array([1.0, 9.0, 2.0, 6.0, 9.0]),
        z=np.zeros((5, 1)),
    )
    labels = np.array([1, 1, 2, 2, 2])
    assignments = np.array([1, 0, 1, 1, 0])
    return c.realize_outcomes(sample, labels, assignments)


def simulate_frame(dgp="dgp1", n=400, num_strata=5, proportions="constant",
                   mechanism="spbr", seed=123):
    spec = c.make_dgp(dgp)
    strata = c.builtin_strata(num_strata)
    pi = c.builtin_proportions(num_strata, proportions)
    sample = c.sample_population(spec, n, c.derive_seed(seed, 0))
    labels = strata.classify(sample.z)
    a = c.assign(mechanism, labels, pi, c.derive_seed(seed, 1))
    return spec, strata, pi, c.realize_outcomes(sample, labels, a)
