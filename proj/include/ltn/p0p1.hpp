// p0p1.hpp: non-matching discretization pair.  The nonlocal region is chosen
// first and discretized with piecewise constants on the parent mesh; a
// separate continuous local mesh is then built whose vertices are the parent
// element centroids in and adjacent to the local region (plus the retained
// domain-boundary vertices), so local and nonlocal DOFs are collocated in the
// overlap and the spliced operator applies unchanged.
#pragma once

#include <memory>

#include "ltn/partition.hpp"

namespace ltn {

struct P0P1Coupling {
  DomainPartition partition;  // partition.local_mesh is the separate mesh
  DofPartition dofs;          // nonlocal_kind = P0
};

// omega_N describes the requested nonlocal region; the parent mesh must
// resolve it along element boundaries (snap mode assigns cut elements to the
// nonlocal side).  The parent mesh carries any needed exterior collar.
P0P1Coupling buildP0P1Coupling(std::shared_ptr<const Mesh> mesh,
                               const Region& omega_N, double delta,
                               const PartitionOptions& opts = {});

// Deterministic Delaunay-style triangulation of a 2D point set (incremental
// insertion with cavity repair, then local edge flips); returns positively
// oriented triangles covering the convex hull.  Exposed for testing.
std::vector<std::array<Index, 3>> triangulatePointSet(
    const std::vector<Vec2>& pts);

}  // namespace ltn
