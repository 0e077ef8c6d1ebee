"""flatfold: continuous flattening of polyhedral 2-manifolds.

Slices an oriented manifold into prismoidal slabs, collapses every spanning
edge with a flat-foldable crease gadget, and produces verified,
time-parameterized folding motions down to a single plane.
"""

from .mesh import (Manifold, OrientedManifold, ValidationReport, load_mesh,
                   orient_generic, save_mesh, validate_manifold)
from .gadgets import (IN_OUT, OUT_OUT, GadgetPattern, ReachBound,
                      SpanningEdgeParams, WallLabeling, assign_labels,
                      build_in_out, build_out_out, edge_params, face_crease,
                      gadget_reach, sample_admissible)
from .slabs import (Slab, SliceDiagnostics, Wall, WallFace, refine_to_prismoidal,
                    slice_at_vertices, split_for_gadget_clearance,
                    split_projection_disjoint)
from .folding import (FoldedGadget, FoldedSlab, StackedFoldedState, compose_global,
                      fold_gadget, fold_slab, solve_p_alpha_prime)
from .verify import (VerificationReport, check_containment, check_flatness,
                     check_isometry, check_kawasaki, check_noncrossing,
                     check_stacked_state, moving_crease_area)

__version__ = "0.1.0"
