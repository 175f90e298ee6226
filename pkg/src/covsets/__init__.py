"""Random covering sets, limsup random fractals and fractal percolation on digit spaces."""
__version__ = "0.1.0"

from .covering import (CoverTrace, TargetSet, hit_target, limsup_cube_counts,  # noqa: E402
                       simulate_cover)
from .errors import *  # noqa: E402,F401,F403
from .estimator import (DimEstimate, Prediction, box_dimension, hit_probability,  # noqa: E402
                        predict)
from .limsup import (LimsupModel, PercolationRun, correlation_profile,  # noqa: E402
                     percolation_sample, percolation_union_hits, sample_limsup_hits)
from .process import OrbitSource, mixing_diagnostic, orbit_point  # noqa: E402
from .sequences import (BlockTable, RadiusSequence, block_counts,  # noqa: E402
                        bt_index_estimate, condition_c_check, sparse_indices)
from .space import (Ball, Cube, DigitSpace, Point, Relation, ball_cube_relation,  # noqa: E402
                    count_cubes_meeting_ball, nesting_family_report)
