#ifndef GESTNET_DATASET_HPP
#define GESTNET_DATASET_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gestnet/skeleton.hpp"
#include "gestnet/tensor.hpp"

namespace gestnet {

// One recorded gesture: frames are row-major T×J×3 (frame, then joint, then
// x y z), in whatever world units the source provides.
struct SkeletonSequence {
    std::size_t joints = 0;
    std::vector<double> frames;
    std::size_t label = 0;
    int subject = -1;          // optional, -1 when absent
    std::string finger_mode;   // optional: "", "one", "whole"

    std::size_t frame_count() const { return joints ? frames.size() / (joints * 3) : 0; }
    double* frame(std::size_t t) { return frames.data() + t * joints * 3; }
    const double* frame(std::size_t t) const { return frames.data() + t * joints * 3; }
};

// Text format, one sequence per file:
//   line 1: J T label [subject] [finger_mode]
//   then T lines of 3J space-separated decimals, joint-major (x y z per joint)
SkeletonSequence load_sequence(const std::string& path);
void save_sequence(const std::string& path, const SkeletonSequence& seq);

// Uniform 20-frame sampling: idx_i = floor(i*T/target) when T >= target,
// otherwise all frames followed by copies of the last one. Idempotent.
SkeletonSequence sample_frames(const SkeletonSequence& seq, std::size_t target = 20);
std::vector<std::size_t> sample_frame_indices(std::size_t t, std::size_t target);

// frame-to-frame deltas, T×J×3 with the first frame all zero
std::vector<double> displacement_features(const SkeletonSequence& sampled);
// per-frame [coordinates || deltas] rows, T×6J
std::vector<double> recurrent_features(const SkeletonSequence& sampled);

// mean over frames -> J×3 pose (the reference pose for partitioning)
ReferencePose mean_pose(const SkeletonSequence& seq);

// Everything one optimizer step consumes. Adjacency group 0 is the shared
// J×J identity; groups 1 and 2 are per-sample [B,J,J] built from each
// sequence's mean pose.
struct GestureBatch {
    Tensor coordinates; // [B,3,20,J]
    Tensor recurrent;   // [B,20,6J]
    Tensor a0;          // [J,J]
    Tensor a1;          // [B,J,J]
    Tensor a2;          // [B,J,J]
    std::vector<std::size_t> labels;

    std::size_t size() const { return labels.size(); }
};

GestureBatch make_batch(const std::vector<const SkeletonSequence*>& seqs,
                        const SkeletonTopology& topology, bool center_wrist = false);

// --- splits ---------------------------------------------------------------------

struct SequenceRef {
    std::string path;
    std::size_t label = 0;
};

enum class SplitProtocol { dhg_fixed_count, fpha_standard, synthetic_random };

SplitProtocol split_protocol_from_name(const std::string& name);

struct SplitConfig {
    SplitProtocol protocol = SplitProtocol::synthetic_random;
    std::uint64_t seed = 0;
    double train_fraction = 0.8; // synthetic_random only
    double val_fraction = 0.05;
};

struct DatasetSplits {
    std::vector<SequenceRef> train;
    std::vector<SequenceRef> val;
    std::vector<SequenceRef> test;
    std::vector<std::string> class_names;
    std::vector<std::string> warnings; // empty-class notices etc.
};

// Partitions a flat list: dhg_fixed_count takes 1960 sequences as the
// training pool and the rest as test; fpha_standard takes 600; synthetic_random
// stratifies per class by train_fraction. Validation is floor(val_fraction *
// train-pool size), drawn seed-deterministically from the pool.
DatasetSplits build_split(const std::vector<SequenceRef>& refs,
                          const std::vector<std::string>& class_names, const SplitConfig& config);

// Scans `<root>/<split>/<class_id>/<sequence_id>.skl` when the root has a
// train/ directory (val/ optional — carved from train/ when absent), else
// `<root>/<class_id>/...` split by `config`.
DatasetSplits load_dataset(const std::string& root, const SplitConfig& config);

void export_manifest(std::ostream& os, const DatasetSplits& splits);

std::vector<SkeletonSequence> load_all(const std::vector<SequenceRef>& refs,
                                       std::size_t expected_joints);

} // namespace gestnet

#endif
