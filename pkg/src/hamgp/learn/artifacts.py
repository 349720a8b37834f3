"""Chain and trajectory artifacts: line-delimited JSON records and companion CSV."""

import json
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from hamgp.learn.gibbs import ChainSample
from hamgp.utils.exceptions import ArtifactError

CSV_FLOAT_FORMAT = "%.17g"


class ChainWriter:
    """Appends chain records as they are produced.

    Use as a context manager; the instance itself is the ``callback`` of
    :func:`hamgp.learn.gibbs.run_particle_gibbs`.
    """

    def __init__(self, chain_path: Union[str, Path], trajectory_path: Optional[Union[str, Path]] = None):
        """
        Args:
            chain_path: Line-delimited JSON file, truncated on entry
            trajectory_path: Optional CSV for the stored trajectories, removed on entry
        """
        self.chain_path = Path(chain_path)
        self.trajectory_path = Path(trajectory_path) if trajectory_path else None
        self._chain = None
        self._trajectories_written = False
        self.count = 0

    def __enter__(self) -> "ChainWriter":
        self.chain_path.parent.mkdir(parents=True, exist_ok=True)
        self._chain = open(self.chain_path, "w", encoding="utf-8")
        if self.trajectory_path is not None and self.trajectory_path.exists():
            self.trajectory_path.unlink()
        return self

    def __exit__(self, *exc) -> None:
        if self._chain is not None:
            self._chain.close()
            self._chain = None

    def __call__(self, sample: ChainSample) -> None:
        """Append one record, and its trajectory when the sample carries one.

        Args:
            sample: Chain state after one iteration

        Raises:
            ArtifactError: If called outside the ``with`` block
        """
        if self._chain is None:
            raise ArtifactError("ChainWriter used outside its context")
        self._chain.write(json.dumps(sample.to_record(), sort_keys=True) + "\n")
        self._chain.flush()
        self.count += 1
        if self.trajectory_path is not None and sample.trajectory is not None:
            self._append_trajectory(sample)

    def _append_trajectory(self, sample: ChainSample) -> None:
        trajectory = sample.trajectory
        n_x = trajectory.states.shape[1]
        frame = pd.DataFrame(
            np.hstack([trajectory.states, trajectory.gradients]),
            columns=[f"x{i}" for i in range(n_x)] + [f"h{i}" for i in range(trajectory.gradients.shape[1])],
        )
        frame.insert(0, "t", np.arange(trajectory.T + 1))
        frame.insert(0, "k", sample.iteration)
        frame.to_csv(
            self.trajectory_path,
            mode="a",
            header=not self._trajectories_written,
            index=False,
            float_format=CSV_FLOAT_FORMAT,
        )
        self._trajectories_written = True


def read_chain(path: Union[str, Path]) -> List[ChainSample]:
    """Load every record of a chain file.

    Args:
        path: File written by :class:`ChainWriter`

    Returns:
        Samples in file order, without trajectories

    Raises:
        ArtifactError: If the file is missing or a line is not a valid record
    """
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"Chain file not found: {path}")
    chain = []
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                chain.append(ChainSample.from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ArtifactError(f"Invalid chain record at {path}:{line_number}: {e}") from e
    return chain


def read_trajectories(path: Union[str, Path]) -> pd.DataFrame:
    """Load the stored trajectories.

    Args:
        path: CSV written by :class:`ChainWriter`

    Returns:
        Long frame with columns k, t, x0, ..., h0, ...; one row per iteration and time index

    Raises:
        ArtifactError: If the file is missing
    """
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"Trajectory file not found: {path}")
    return pd.read_csv(path)


def retained_samples(chain: List[ChainSample], burn_in: int = 0, thinning: int = 1) -> List[ChainSample]:
    """Samples with iteration > burn_in, keeping every ``thinning``-th.

    Args:
        chain: Samples in iteration order
        burn_in: Iterations up to this index are dropped
        thinning: Keep every ``thinning``-th remaining sample

    Returns:
        Retained samples

    Raises:
        ArtifactError: If nothing is retained
    """
    if thinning < 1:
        raise ArtifactError(f"thinning must be >= 1, got {thinning}")
    kept = [s for s in chain if s.iteration > burn_in][::thinning]
    if not kept:
        raise ArtifactError(f"No samples retained after burn-in {burn_in} from a chain of {len(chain)}")
    return kept
