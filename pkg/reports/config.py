"""Resolved configuration of one command-line run."""
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Union

from core.simulation import A_VALUES
from core.vecm import BetaPenalty, PenaltyConfig

COMMANDS = ('fit', 'rank', 'simulate', 'test_zerosum', 'forecast')
INPUT_COMMANDS = ('fit', 'rank', 'test_zerosum', 'forecast')


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    output_format: str = 'json'
    p: int = 2
    rank: Union[int, str] = 'auto'
    method: str = 'sparse_lasso'
    methods: Optional[List[str]] = None
    intercept: bool = False
    lambda1: Optional[List[float]] = None
    lambda2: Optional[float] = None
    lambda3: Optional[float] = None
    penalize_intercept: bool = True
    tol_outer: float = 1e-3
    max_outer_iter: int = 100
    grid_size: int = 20
    sample_size: str = 'n'
    B: int = 999
    eta: float = 0.05
    window: int = 48
    reselect_rank: bool = False
    study: str = 'angle'
    designs: List[str] = field(default_factory=lambda: ['all'])
    a_values: List[float] = field(default_factory=lambda: list(A_VALUES))
    M: int = 100
    noise_scale: float = 1.0

    def penalty_config(self):
        """PenaltyConfig for the estimator; the adaptive method is chosen by ``method``."""
        return PenaltyConfig(
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            lambda3=self.lambda3,
            beta_penalty=BetaPenalty.LASSO,
            tol_outer=self.tol_outer,
            max_outer_iter=self.max_outer_iter,
            penalize_intercept=self.penalize_intercept,
            grid_size=self.grid_size,
        )

    def as_dict(self):
        return asdict(self)
