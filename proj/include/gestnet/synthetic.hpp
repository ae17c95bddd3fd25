#ifndef GESTNET_SYNTHETIC_HPP
#define GESTNET_SYNTHETIC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gestnet/config.hpp"
#include "gestnet/dataset.hpp"
#include "gestnet/rng.hpp"
#include "gestnet/skeleton.hpp"

namespace gestnet {

enum class GestureKind {
    swipe_left,
    swipe_right,
    swipe_up,
    swipe_down,
    rotation_cw,
    rotation_ccw,
    grab,
    pinch,
};

std::string gesture_kind_name(GestureKind kind);
GestureKind gesture_kind_from_name(const std::string& name);

struct SyntheticClassSpec {
    std::string name;
    GestureKind kind;
};

struct SyntheticSpec {
    std::vector<SyntheticClassSpec> classes;
    double noise = 0.0;
    std::size_t samples_per_class = 0;
    std::uint64_t seed = 0;
    TopologyKind topology = TopologyKind::dhg22;
};

// the eight canonical families, in this order
std::vector<SyntheticClassSpec> default_synthetic_classes();

// A neutral flat right hand, desk units (meters), used as the base pose of
// every generated gesture.
ReferencePose canonical_rest_pose(const SkeletonTopology& topology);

// One gesture: 20-50 frames of the rest pose moved by the family's rule
// (rigid translation for swipes, rotation about the vertical axis through the
// base pose's gravity center, radial contraction of digit chains for
// grab/pinch), then isotropic Gaussian noise of the given amplitude.
//
// Every family consumes the same number of random draws for its parameter
// block, so sequences generated from the same rng state differ only by the
// family rule — rotation_cw/ccw pairs mirror exactly at noise 0.
SkeletonSequence generate_gesture(GestureKind kind, const SkeletonTopology& topology,
                                  std::size_t label, double noise, Rng& rng);

// samples_per_class sequences per class; sample i of every class shares its
// parameter block (seeded by spec.seed and i, not by the class)
std::vector<SkeletonSequence> generate_synthetic(const SyntheticSpec& spec,
                                                 const SkeletonTopology& topology);

// writes <out_root>/<split>/<class>/<class>_<i>.skl with the first
// floor(train_fraction * samples_per_class) samples of each class in train/
void write_synthetic_dataset(const SyntheticSpec& spec, const std::string& out_root,
                             double train_fraction);

struct SyntheticDatasetSpec {
    SyntheticSpec spec;
    double train_fraction = 0.8;
};

// key-value spec file: classes (comma-separated kind names, default all
// eight), noise, samples_per_class, seed, topology, train_fraction
SyntheticDatasetSpec parse_synthetic_spec(const KeyValues& kv, const std::string& source);

} // namespace gestnet

#endif
