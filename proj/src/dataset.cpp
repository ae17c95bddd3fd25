#include "gestnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "gestnet/rng.hpp"

namespace fs = std::filesystem;

namespace gestnet {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

} // namespace

SkeletonSequence load_sequence(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sequence file " + path);
    std::string line;
    if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
    std::istringstream head(line);
    long long j = 0, t = 0, label = 0;
    if (!(head >> j >> t >> label) || j <= 0 || t <= 0 || label < 0)
        parse_fail(path, 1, "header must be 'J T label [subject] [finger_mode]'");
    SkeletonSequence seq;
    seq.joints = static_cast<std::size_t>(j);
    seq.label = static_cast<std::size_t>(label);
    long long subject = -1;
    if (head >> subject) seq.subject = static_cast<int>(subject);
    std::string mode;
    if (head >> mode) {
        if (mode != "one" && mode != "whole")
            parse_fail(path, 1, "finger_mode must be 'one' or 'whole', got '" + mode + "'");
        seq.finger_mode = mode;
    }
    std::string extra;
    if (head >> extra) parse_fail(path, 1, "trailing tokens in header");

    std::size_t per_frame = seq.joints * 3;
    seq.frames.reserve(static_cast<std::size_t>(t) * per_frame);
    for (long long f = 0; f < t; ++f) {
        std::size_t lineno = static_cast<std::size_t>(f) + 2;
        if (!std::getline(in, line)) parse_fail(path, lineno, "unexpected end of file");
        std::istringstream row(line);
        std::string token;
        std::size_t got = 0;
        while (row >> token) {
            if (got == per_frame)
                parse_fail(path, lineno,
                           "expected " + std::to_string(per_frame) + " values, got more");
            double v = 0.0;
            std::size_t used = 0;
            try {
                v = std::stod(token, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != token.size()) parse_fail(path, lineno, "malformed value '" + token + "'");
            if (!std::isfinite(v)) parse_fail(path, lineno, "non-finite coordinate '" + token + "'");
            seq.frames.push_back(v);
            ++got;
        }
        if (got != per_frame)
            parse_fail(path, lineno, "expected " + std::to_string(per_frame) + " values, got " +
                                         std::to_string(got));
    }
    return seq;
}

void save_sequence(const std::string& path, const SkeletonSequence& seq) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sequence file " + path);
    out << seq.joints << ' ' << seq.frame_count() << ' ' << seq.label;
    if (seq.subject >= 0) out << ' ' << seq.subject;
    if (!seq.finger_mode.empty()) {
        if (seq.subject < 0) out << ' ' << 0; // subject column precedes finger_mode
        out << ' ' << seq.finger_mode;
    }
    out << '\n';
    char buf[64];
    std::size_t per_frame = seq.joints * 3;
    for (std::size_t t = 0; t < seq.frame_count(); ++t) {
        const double* f = seq.frame(t);
        for (std::size_t i = 0; i < per_frame; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", f[i]);
            if (i) out << ' ';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<std::size_t> sample_frame_indices(std::size_t t, std::size_t target) {
    std::vector<std::size_t> idx(target);
    if (t >= target) {
        for (std::size_t i = 0; i < target; ++i) idx[i] = i * t / target;
    } else {
        for (std::size_t i = 0; i < target; ++i) idx[i] = std::min(i, t - 1);
    }
    return idx;
}

SkeletonSequence sample_frames(const SkeletonSequence& seq, std::size_t target) {
    if (seq.frame_count() == 0) throw std::invalid_argument("sample_frames: empty sequence");
    SkeletonSequence out;
    out.joints = seq.joints;
    out.label = seq.label;
    out.subject = seq.subject;
    out.finger_mode = seq.finger_mode;
    std::size_t per_frame = seq.joints * 3;
    out.frames.reserve(target * per_frame);
    for (std::size_t i : sample_frame_indices(seq.frame_count(), target))
        out.frames.insert(out.frames.end(), seq.frame(i), seq.frame(i) + per_frame);
    return out;
}

std::vector<double> displacement_features(const SkeletonSequence& sampled) {
    std::size_t t = sampled.frame_count();
    std::size_t per_frame = sampled.joints * 3;
    std::vector<double> deltas(t * per_frame, 0.0);
    for (std::size_t f = 1; f < t; ++f)
        for (std::size_t i = 0; i < per_frame; ++i)
            deltas[f * per_frame + i] = sampled.frame(f)[i] - sampled.frame(f - 1)[i];
    return deltas;
}

std::vector<double> recurrent_features(const SkeletonSequence& sampled) {
    std::size_t t = sampled.frame_count();
    std::size_t per_frame = sampled.joints * 3;
    auto deltas = displacement_features(sampled);
    std::vector<double> feats(t * per_frame * 2);
    for (std::size_t f = 0; f < t; ++f) {
        double* row = feats.data() + f * per_frame * 2;
        std::copy(sampled.frame(f), sampled.frame(f) + per_frame, row);
        std::copy(deltas.begin() + f * per_frame, deltas.begin() + (f + 1) * per_frame,
                  row + per_frame);
    }
    return feats;
}

ReferencePose mean_pose(const SkeletonSequence& seq) {
    std::size_t t = seq.frame_count();
    if (t == 0) throw std::invalid_argument("mean_pose: empty sequence");
    ReferencePose pose;
    pose.coordinates.assign(seq.joints, {0.0, 0.0, 0.0});
    for (std::size_t f = 0; f < t; ++f) {
        const double* fr = seq.frame(f);
        for (std::size_t j = 0; j < seq.joints; ++j)
            for (int a = 0; a < 3; ++a) pose.coordinates[j][a] += fr[j * 3 + a];
    }
    for (auto& p : pose.coordinates)
        for (int a = 0; a < 3; ++a) p[a] /= static_cast<double>(t);
    return pose;
}

GestureBatch make_batch(const std::vector<const SkeletonSequence*>& seqs,
                        const SkeletonTopology& topology, bool center_wrist) {
    if (seqs.empty()) throw std::invalid_argument("make_batch: empty batch");
    std::size_t b = seqs.size();
    std::size_t j = topology.joint_count;
    constexpr std::size_t t = 20;
    std::size_t wrist = wrist_joint(topology);

    std::vector<double> coords(b * 3 * t * j);
    std::vector<double> recur(b * t * 6 * j);
    std::vector<double> a1(b * j * j), a2(b * j * j);
    GestureBatch batch;
    batch.labels.resize(b);

    for (std::size_t bi = 0; bi < b; ++bi) {
        const SkeletonSequence& raw = *seqs[bi];
        if (raw.joints != j)
            throw std::invalid_argument("make_batch: sequence has " + std::to_string(raw.joints) +
                                        " joints, topology has " + std::to_string(j));
        SkeletonSequence s = sample_frames(raw, t);
        if (center_wrist) {
            for (std::size_t f = 0; f < t; ++f) {
                double* fr = s.frame(f);
                double wx = fr[wrist * 3], wy = fr[wrist * 3 + 1], wz = fr[wrist * 3 + 2];
                for (std::size_t q = 0; q < j; ++q) {
                    fr[q * 3] -= wx;
                    fr[q * 3 + 1] -= wy;
                    fr[q * 3 + 2] -= wz;
                }
            }
        }
        batch.labels[bi] = s.label;

        for (std::size_t f = 0; f < t; ++f) {
            const double* fr = s.frame(f);
            for (std::size_t q = 0; q < j; ++q)
                for (std::size_t c = 0; c < 3; ++c)
                    coords[((bi * 3 + c) * t + f) * j + q] = fr[q * 3 + c];
        }
        auto feats = recurrent_features(s);
        std::copy(feats.begin(), feats.end(), recur.begin() + bi * t * 6 * j);

        auto part = partition_adjacency(topology, mean_pose(s));
        normalize_adjacency(part);
        std::copy(part.normalized[1].begin(), part.normalized[1].end(),
                  a1.begin() + bi * j * j);
        std::copy(part.normalized[2].begin(), part.normalized[2].end(),
                  a2.begin() + bi * j * j);
    }

    std::vector<double> ident(j * j, 0.0);
    for (std::size_t q = 0; q < j; ++q) ident[q * j + q] = 1.0;

    batch.coordinates = Tensor({b, 3, t, j}, std::move(coords));
    batch.recurrent = Tensor({b, t, 6 * j}, std::move(recur));
    batch.a0 = Tensor({j, j}, std::move(ident));
    batch.a1 = Tensor({b, j, j}, std::move(a1));
    batch.a2 = Tensor({b, j, j}, std::move(a2));
    return batch;
}

// --- splits ---------------------------------------------------------------------

SplitProtocol split_protocol_from_name(const std::string& name) {
    if (name == "dhg_fixed_count") return SplitProtocol::dhg_fixed_count;
    if (name == "fpha_standard") return SplitProtocol::fpha_standard;
    if (name == "synthetic_random") return SplitProtocol::synthetic_random;
    throw std::invalid_argument("unknown split protocol '" + name + "'");
}

namespace {

void warn_empty_classes(DatasetSplits& splits) {
    auto check = [&](const std::vector<SequenceRef>& part, const char* name) {
        std::vector<std::size_t> count(splits.class_names.size(), 0);
        for (const auto& r : part)
            if (r.label < count.size()) ++count[r.label];
        for (std::size_t c = 0; c < count.size(); ++c)
            if (count[c] == 0)
                splits.warnings.push_back("class '" + splits.class_names[c] +
                                          "' has no sequences in the " + name + " split");
    };
    check(splits.train, "train");
    if (!splits.val.empty()) check(splits.val, "val");
    check(splits.test, "test");
}

// carve validation out of the training pool: floor(val_fraction * pool)
void carve_validation(DatasetSplits& splits, std::vector<SequenceRef> pool, double val_fraction,
                      std::uint64_t seed) {
    std::size_t nval = static_cast<std::size_t>(
        std::floor(val_fraction * static_cast<double>(pool.size())));
    Rng rng(mix_seed(seed, 0x76616c5f73706c69ULL, pool.size()));
    rng.shuffle(pool);
    splits.val.assign(pool.begin(), pool.begin() + nval);
    splits.train.assign(pool.begin() + nval, pool.end());
    auto by_path = [](const SequenceRef& a, const SequenceRef& b) { return a.path < b.path; };
    std::sort(splits.val.begin(), splits.val.end(), by_path);
    std::sort(splits.train.begin(), splits.train.end(), by_path);
}

} // namespace

DatasetSplits build_split(const std::vector<SequenceRef>& refs,
                          const std::vector<std::string>& class_names,
                          const SplitConfig& config) {
    DatasetSplits splits;
    splits.class_names = class_names;
    std::vector<SequenceRef> pool;

    if (config.protocol == SplitProtocol::synthetic_random) {
        std::map<std::size_t, std::vector<SequenceRef>> by_class;
        for (const auto& r : refs) by_class[r.label].push_back(r);
        for (auto& [label, members] : by_class) {
            std::sort(members.begin(), members.end(),
                      [](const SequenceRef& a, const SequenceRef& b) { return a.path < b.path; });
            Rng rng(mix_seed(config.seed, 0x636c6173735f7368ULL, label));
            rng.shuffle(members);
            std::size_t ntrain = static_cast<std::size_t>(
                std::floor(config.train_fraction * static_cast<double>(members.size())));
            pool.insert(pool.end(), members.begin(), members.begin() + ntrain);
            splits.test.insert(splits.test.end(), members.begin() + ntrain, members.end());
        }
    } else {
        std::size_t fixed = config.protocol == SplitProtocol::dhg_fixed_count ? 1960 : 600;
        if (refs.size() < fixed)
            throw std::invalid_argument("split protocol needs at least " + std::to_string(fixed) +
                                        " sequences, got " + std::to_string(refs.size()));
        std::vector<SequenceRef> all = refs;
        std::sort(all.begin(), all.end(),
                  [](const SequenceRef& a, const SequenceRef& b) { return a.path < b.path; });
        Rng rng(mix_seed(config.seed, 0x666978656473706cULL, fixed));
        rng.shuffle(all);
        pool.assign(all.begin(), all.begin() + fixed);
        splits.test.assign(all.begin() + fixed, all.end());
    }

    std::sort(splits.test.begin(), splits.test.end(),
              [](const SequenceRef& a, const SequenceRef& b) { return a.path < b.path; });
    carve_validation(splits, std::move(pool), config.val_fraction, config.seed);
    warn_empty_classes(splits);
    return splits;
}

namespace {

std::vector<std::string> sorted_subdirs(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

std::vector<SequenceRef> scan_class_dirs(const fs::path& dir,
                                         const std::vector<std::string>& class_names) {
    std::vector<SequenceRef> refs;
    for (std::size_t label = 0; label < class_names.size(); ++label) {
        fs::path cls = dir / class_names[label];
        if (!fs::exists(cls)) continue;
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(cls))
            if (e.is_regular_file() && e.path().extension() == ".skl")
                files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        for (auto& f : files) refs.push_back({std::move(f), label});
    }
    return refs;
}

} // namespace

DatasetSplits load_dataset(const std::string& root, const SplitConfig& config) {
    fs::path rootp(root);
    if (!fs::is_directory(rootp)) throw std::runtime_error("dataset root not found: " + root);

    bool has_split_dirs = fs::is_directory(rootp / "train");
    if (has_split_dirs) {
        std::vector<std::string> class_set;
        for (const char* split : {"train", "val", "test"}) {
            fs::path dir = rootp / split;
            if (!fs::is_directory(dir)) continue;
            for (auto& name : sorted_subdirs(dir))
                if (std::find(class_set.begin(), class_set.end(), name) == class_set.end())
                    class_set.push_back(name);
        }
        std::sort(class_set.begin(), class_set.end());

        DatasetSplits splits;
        splits.class_names = class_set;
        std::vector<SequenceRef> pool = scan_class_dirs(rootp / "train", class_set);
        if (fs::is_directory(rootp / "test"))
            splits.test = scan_class_dirs(rootp / "test", class_set);
        if (fs::is_directory(rootp / "val")) {
            splits.val = scan_class_dirs(rootp / "val", class_set);
            splits.train = std::move(pool);
        } else {
            carve_validation(splits, std::move(pool), config.val_fraction, config.seed);
        }
        warn_empty_classes(splits);
        return splits;
    }

    auto class_names = sorted_subdirs(rootp);
    if (class_names.empty())
        throw std::runtime_error("dataset root has no class directories: " + root);
    auto refs = scan_class_dirs(rootp, class_names);
    return build_split(refs, class_names, config);
}

void export_manifest(std::ostream& os, const DatasetSplits& splits) {
    os << "path,class,label,split\n";
    auto dump = [&](const std::vector<SequenceRef>& part, const char* name) {
        for (const auto& r : part)
            os << r.path << ',' << splits.class_names[r.label] << ',' << r.label << ',' << name
               << '\n';
    };
    dump(splits.train, "train");
    dump(splits.val, "val");
    dump(splits.test, "test");
}

std::vector<SkeletonSequence> load_all(const std::vector<SequenceRef>& refs,
                                       std::size_t expected_joints) {
    std::vector<SkeletonSequence> seqs;
    seqs.reserve(refs.size());
    for (const auto& r : refs) {
        SkeletonSequence s = load_sequence(r.path);
        if (expected_joints && s.joints != expected_joints)
            throw std::runtime_error(r.path + ": expected " + std::to_string(expected_joints) +
                                     " joints, found " + std::to_string(s.joints));
        s.label = r.label; // the split assignment wins over the file header
        seqs.push_back(std::move(s));
    }
    return seqs;
}

} // namespace gestnet
