"""Curriculum labeling: percentile-paced self-training for SSL.

Modules: data (datasets and splits), nn (classifiers and training), augment
(feature-space augmentation), pacing (percentile thresholds and selection),
curriculum (the self-training loop and baselines), theory (utility/prior
identity checks), experiments (generators and comparative studies),
boundary (SVG decision-boundary plots), config/cli (run plumbing).
"""

__version__ = "0.1.0"

from .kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
