#include "gestnet/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>

namespace gestnet {

std::string topology_kind_name(TopologyKind kind) {
    switch (kind) {
    case TopologyKind::dhg22: return "dhg22";
    case TopologyKind::fpha21: return "fpha21";
    case TopologyKind::custom: return "custom";
    }
    return "custom";
}

TopologyKind topology_kind_from_name(const std::string& name) {
    if (name == "dhg22") return TopologyKind::dhg22;
    if (name == "fpha21") return TopologyKind::fpha21;
    if (name == "custom") return TopologyKind::custom;
    throw std::invalid_argument("unknown topology kind '" + name + "'");
}

SkeletonTopology build_hand_topology(TopologyKind kind) {
    SkeletonTopology t;
    t.kind = kind;
    if (kind == TopologyKind::dhg22) {
        t.joint_count = 22;
        t.edges.emplace_back(0, 1); // wrist-palm
        for (std::size_t f = 0; f < 5; ++f) {
            std::size_t base = 2 + 4 * f;
            t.edges.emplace_back(1, base);
            for (std::size_t s = 0; s < 3; ++s) t.edges.emplace_back(base + s, base + s + 1);
        }
    } else if (kind == TopologyKind::fpha21) {
        t.joint_count = 21;
        for (std::size_t f = 0; f < 5; ++f) {
            std::size_t base = 1 + 4 * f;
            t.edges.emplace_back(0, base);
            for (std::size_t s = 0; s < 3; ++s) t.edges.emplace_back(base + s, base + s + 1);
        }
    } else {
        throw std::invalid_argument("build_hand_topology: construct custom topologies directly");
    }
    validate_topology(t);
    return t;
}

void validate_topology(const SkeletonTopology& topology) {
    std::size_t j = topology.joint_count;
    if (j == 0) throw std::invalid_argument("topology: no joints");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::vector<std::vector<std::size_t>> nbr(j);
    for (auto [a, b] : topology.edges) {
        if (a >= j || b >= j) throw std::invalid_argument("topology: edge index out of range");
        if (a == b) throw std::invalid_argument("topology: self-loop edge");
        auto key = std::minmax(a, b);
        if (!seen.insert(key).second) throw std::invalid_argument("topology: duplicate edge");
        nbr[a].push_back(b);
        nbr[b].push_back(a);
    }
    // connectivity from joint 0
    std::vector<char> vis(j, 0);
    std::vector<std::size_t> stack{0};
    vis[0] = 1;
    std::size_t count = 0;
    while (!stack.empty()) {
        std::size_t v = stack.back();
        stack.pop_back();
        ++count;
        for (std::size_t w : nbr[v])
            if (!vis[w]) {
                vis[w] = 1;
                stack.push_back(w);
            }
    }
    if (count != j) throw std::invalid_argument("topology: graph is not connected");
}

std::size_t wrist_joint(const SkeletonTopology&) { return 0; }

std::vector<std::vector<std::size_t>> finger_chains(const SkeletonTopology& topology) {
    std::size_t first_base;
    if (topology.kind == TopologyKind::dhg22)
        first_base = 2;
    else if (topology.kind == TopologyKind::fpha21)
        first_base = 1;
    else
        throw std::invalid_argument("finger_chains: defined for the built-in hand topologies");
    std::vector<std::vector<std::size_t>> chains;
    for (std::size_t f = 0; f < 5; ++f) {
        std::size_t base = first_base + 4 * f;
        chains.push_back({base, base + 1, base + 2, base + 3});
    }
    return chains;
}

std::array<double, 3> gravity_center(const ReferencePose& pose) {
    if (pose.coordinates.empty()) throw std::invalid_argument("gravity_center: empty pose");
    std::array<double, 3> c{0.0, 0.0, 0.0};
    for (const auto& p : pose.coordinates) {
        for (int a = 0; a < 3; ++a) {
            if (!std::isfinite(p[a]))
                throw std::invalid_argument("gravity_center: non-finite coordinate");
            c[a] += p[a];
        }
    }
    for (int a = 0; a < 3; ++a) c[a] /= static_cast<double>(pose.coordinates.size());
    return c;
}

namespace {

double dist2(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

PartitionedAdjacency partition_adjacency(const SkeletonTopology& topology,
                                         const ReferencePose& pose) {
    if (pose.joint_count() != topology.joint_count)
        throw std::invalid_argument("partition_adjacency: pose joint count mismatch");
    std::size_t j = topology.joint_count;
    PartitionedAdjacency part;
    part.joints = j;
    for (auto& m : part.unnormalized) m.assign(j * j, 0.0);

    auto center = gravity_center(pose);
    std::vector<double> d(j);
    for (std::size_t i = 0; i < j; ++i) d[i] = dist2(pose.coordinates[i], center);

    for (std::size_t i = 0; i < j; ++i) part.unnormalized[0][i * j + i] = 1.0;
    for (auto [a, b] : topology.edges) {
        // neighbor strictly closer to the center than the root -> centripetal;
        // farther or tied -> centrifugal
        auto place = [&](std::size_t root, std::size_t n) {
            std::size_t group = d[n] < d[root] ? 1 : 2;
            part.unnormalized[group][root * j + n] = 1.0;
        };
        place(a, b);
        place(b, a);
    }
    return part;
}

void normalize_adjacency(PartitionedAdjacency& part) {
    std::size_t j = part.joints;
    constexpr double epsilon = 1e-6;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& a = part.unnormalized[k];
        if (a.size() != j * j)
            throw std::invalid_argument("normalize_adjacency: unnormalized matrices missing");
        for (double v : a)
            if (v < 0.0) throw std::invalid_argument("normalize_adjacency: negative entry");
        std::vector<double> inv_sqrt(j);
        for (std::size_t r = 0; r < j; ++r) {
            double deg = 0.0;
            for (std::size_t c = 0; c < j; ++c) deg += a[r * j + c];
            // a zero-degree row has only zero entries; the epsilon keeps the
            // scaling finite without touching positive-degree rows
            inv_sqrt[r] = 1.0 / std::sqrt(deg > 0.0 ? deg : epsilon);
        }
        auto& n = part.normalized[k];
        n.assign(j * j, 0.0);
        for (std::size_t r = 0; r < j; ++r)
            for (std::size_t c = 0; c < j; ++c)
                n[r * j + c] = inv_sqrt[r] * a[r * j + c] * inv_sqrt[c];
    }
}

std::vector<double> binary_adjacency(const SkeletonTopology& topology) {
    std::size_t j = topology.joint_count;
    std::vector<double> m(j * j, 0.0);
    for (auto [a, b] : topology.edges) {
        m[a * j + b] = 1.0;
        m[b * j + a] = 1.0;
    }
    return m;
}

void write_matrix_csv(std::ostream& os, const double* m, std::size_t rows, std::size_t cols) {
    char buf[64];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m[r * cols + c]);
            if (c) os << ',';
            os << buf;
        }
        os << '\n';
    }
}

} // namespace gestnet
