"""Time-domain acoustic scattering by clusters of small, highly contrasting bubbles."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .pulse import CausalPolyExp, Pulse, RaisedCosineBurst, ZeroPulse, pulse_from_dict
from .scene import (BubbleSpec, ClusterModel, Medium, PointSource, Scene, build_cluster,
                    check_apriori_condition, check_inversion_condition, load_scene, loads_scene,
                    minnaert_frequency, scene_from_dict, scene_to_dict)
from .geometry import SphereQuadrature, a_surface, averaged_kernel
from .incident import IncidentField, eval_incident, forcing_b, rhs_vector
from .dynamics import (AmplitudeSolution, closed_form_dimer, closed_form_tetramer, duhamel_solve,
                       solve_delay_system, solve_dense_system, solve_dimer_collection)
from .field import ObservationSet, TimeSeries, dimer_collection_field, dimer_dominant_field, scattered_field
from .effective import (EffectiveDesign, SpaceTimeGrid, dispersive_residual, recover_b,
                        solve_susceptibility)
