import numpy as np
import pytest

from fpscope.rng import Stream, derive_seed

ACCEPTANCE_LINES = []


def record(name, passed, detail):
    """Remember one acceptance line; printed again in the terminal summary."""
    line = f"{'PASS' if passed else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def noise(shape, seed, scale=1.0):
    n = int(np.prod(shape))
    return scale * Stream(seed).normal(n).reshape(shape)


def white_corpus(count, size, seed, std=0.1, quantize=True):
    out = []
    for i in range(count):
        x = 0.5 + std * Stream(derive_seed(seed, i)).normal(size * size).reshape(size, size)
        x = np.clip(x, 0, 1)
        if quantize:
            x = np.floor(x * 255 + 0.5) / 255
        out.append(x)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def smooth_corpus(count, seed, quality=None, alpha=5.0, size=256):
    """Smooth power-law fields, optionally JPEG-quantized, stored at 8 bits."""
    from fpscope.synth import gen_powerlaw_field, jpeg_simulate
    out = []
    for i in range(count):
        x = gen_powerlaw_field(size, alpha, derive_seed(seed, i))
        if quality is not None:
            x = jpeg_simulate(x, quality)
        out.append(np.floor(np.clip(x, 0, 1) * 255 + 0.5) / 255)
    return out
