#ifndef GESTNET_SKELETON_HPP
#define GESTNET_SKELETON_HPP

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace gestnet {

enum class TopologyKind { dhg22, fpha21, custom };

std::string topology_kind_name(TopologyKind kind);
TopologyKind topology_kind_from_name(const std::string& name);

// Hand skeleton as an undirected graph over joint indices. Edges are stored
// with the smaller index first and no duplicates.
struct SkeletonTopology {
    std::size_t joint_count = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    TopologyKind kind = TopologyKind::custom;
};

// Fixed joint index conventions:
//   dhg22: 0 wrist, 1 palm, then five 4-joint finger chains base->tip
//          (thumb 2-5, index 6-9, middle 10-13, ring 14-17, pinky 18-21);
//          palm connects to wrist and to every finger base.
//   fpha21: 0 wrist, finger chains at 1-4, 5-8, 9-12, 13-16, 17-20;
//           no palm joint, wrist connects to every finger base.
SkeletonTopology build_hand_topology(TopologyKind kind);

// checks index bounds, self-loops, duplicates, and connectivity from joint 0
void validate_topology(const SkeletonTopology& topology);

std::size_t wrist_joint(const SkeletonTopology& topology);
// the five finger chains base->tip under the conventions above
std::vector<std::vector<std::size_t>> finger_chains(const SkeletonTopology& topology);

// One pose of J joints, row j = (x, y, z).
struct ReferencePose {
    std::vector<std::array<double, 3>> coordinates;

    std::size_t joint_count() const { return coordinates.size(); }
};

std::array<double, 3> gravity_center(const ReferencePose& pose);

// Root / centripetal / centrifugal decomposition of the neighbor structure,
// plus its symmetric normalization. Matrices are row-major J×J; entry [r][n]
// of the centripetal matrix is 1 when neighbor n sits closer to the gravity
// center than root r (ties go to the centrifugal matrix).
struct PartitionedAdjacency {
    std::size_t joints = 0;
    std::array<std::vector<double>, 3> unnormalized;
    std::array<std::vector<double>, 3> normalized;
};

PartitionedAdjacency partition_adjacency(const SkeletonTopology& topology,
                                         const ReferencePose& pose);

// fills `normalized` with L^{-1/2} A L^{-1/2}, L the diagonal of row sums.
// Rows with zero degree get an epsilon stand-in so entries stay finite (they
// are all zero anyway); positive-degree rows are normalized exactly.
void normalize_adjacency(PartitionedAdjacency& part);

std::vector<double> binary_adjacency(const SkeletonTopology& topology);

void write_matrix_csv(std::ostream& os, const double* m, std::size_t rows, std::size_t cols);

} // namespace gestnet

#endif
