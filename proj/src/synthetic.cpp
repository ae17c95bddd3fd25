#include "gestnet/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace fs = std::filesystem;

namespace gestnet {

std::string gesture_kind_name(GestureKind kind) {
    switch (kind) {
    case GestureKind::swipe_left: return "swipe_left";
    case GestureKind::swipe_right: return "swipe_right";
    case GestureKind::swipe_up: return "swipe_up";
    case GestureKind::swipe_down: return "swipe_down";
    case GestureKind::rotation_cw: return "rotation_cw";
    case GestureKind::rotation_ccw: return "rotation_ccw";
    case GestureKind::grab: return "grab";
    case GestureKind::pinch: return "pinch";
    }
    return "?";
}

GestureKind gesture_kind_from_name(const std::string& name) {
    for (int k = 0; k <= static_cast<int>(GestureKind::pinch); ++k)
        if (name == gesture_kind_name(static_cast<GestureKind>(k)))
            return static_cast<GestureKind>(k);
    throw std::invalid_argument("unknown gesture kind '" + name + "'");
}

std::vector<SyntheticClassSpec> default_synthetic_classes() {
    std::vector<SyntheticClassSpec> classes;
    for (int k = 0; k <= static_cast<int>(GestureKind::pinch); ++k) {
        auto kind = static_cast<GestureKind>(k);
        classes.push_back({gesture_kind_name(kind), kind});
    }
    return classes;
}

ReferencePose canonical_rest_pose(const SkeletonTopology& topology) {
    // x across the desk, y away from the user, z up; wrist near the origin
    static const std::array<double, 3> wrist = {0.000, -0.090, 0.000};
    static const std::array<double, 3> palm = {0.000, -0.040, 0.005};
    static const std::array<std::array<double, 3>, 20> fingers = {{
        {-0.045, -0.025, 0.000}, {-0.065, 0.000, 0.000}, {-0.080, 0.020, 0.000},
        {-0.090, 0.035, 0.000}, // thumb
        {-0.025, 0.010, 0.005},  {-0.030, 0.045, 0.005}, {-0.033, 0.070, 0.005},
        {-0.035, 0.090, 0.005}, // index
        {0.000, 0.015, 0.005},   {0.000, 0.055, 0.005},  {0.000, 0.085, 0.005},
        {0.000, 0.105, 0.005}, // middle
        {0.022, 0.010, 0.005},   {0.028, 0.045, 0.005},  {0.032, 0.070, 0.005},
        {0.035, 0.088, 0.005}, // ring
        {0.042, 0.000, 0.005},   {0.052, 0.028, 0.005},  {0.058, 0.048, 0.005},
        {0.062, 0.062, 0.005}, // pinky
    }};
    ReferencePose pose;
    if (topology.kind == TopologyKind::dhg22) {
        pose.coordinates.push_back(wrist);
        pose.coordinates.push_back(palm);
    } else if (topology.kind == TopologyKind::fpha21) {
        pose.coordinates.push_back(wrist);
    } else {
        throw std::invalid_argument("canonical_rest_pose: built-in hand topologies only");
    }
    for (const auto& p : fingers) pose.coordinates.push_back(p);
    return pose;
}

SkeletonSequence generate_gesture(GestureKind kind, const SkeletonTopology& topology,
                                  std::size_t label, double noise, Rng& rng) {
    if (noise < 0.0) throw std::invalid_argument("generate_gesture: negative noise");
    ReferencePose base = canonical_rest_pose(topology);
    std::size_t j = topology.joint_count;
    auto center = gravity_center(base);

    // the parameter block, drawn in the same order for every family
    std::size_t frames = 20 + rng.uniform_index(31);
    std::array<double, 3> offset;
    for (auto& o : offset) o = rng.uniform(-0.05, 0.05);
    double m = rng.uniform();

    constexpr double pi = 3.14159265358979323846;
    double amp = 0.4 + 0.4 * m;                     // swipe travel
    double theta = (70.0 + 40.0 * m) * pi / 180.0;  // rotation sweep
    double contraction = 0.35 + 0.25 * m;            // grab/pinch depth

    // grab curls all five digit chains toward the center, pinch only thumb and
    // index; wrist (and palm) stay put in both
    std::vector<char> contracts(j, 0);
    bool contracting = kind == GestureKind::grab || kind == GestureKind::pinch;
    if (contracting) {
        auto chains = finger_chains(topology);
        std::size_t count = kind == GestureKind::grab ? 5 : 2;
        for (std::size_t f = 0; f < count; ++f)
            for (std::size_t q : chains[f]) contracts[q] = 1;
    }

    SkeletonSequence seq;
    seq.joints = j;
    seq.label = label;
    seq.frames.resize(frames * j * 3);

    for (std::size_t t = 0; t < frames; ++t) {
        double phase = static_cast<double>(t) / static_cast<double>(frames - 1);
        double* out = seq.frame(t);
        for (std::size_t q = 0; q < j; ++q) {
            std::array<double, 3> p = base.coordinates[q];
            switch (kind) {
            case GestureKind::swipe_left: p[0] -= amp * phase; break;
            case GestureKind::swipe_right: p[0] += amp * phase; break;
            case GestureKind::swipe_up: p[1] += amp * phase; break;
            case GestureKind::swipe_down: p[1] -= amp * phase; break;
            case GestureKind::rotation_cw:
            case GestureKind::rotation_ccw: {
                double a = theta * phase * (kind == GestureKind::rotation_cw ? -1.0 : 1.0);
                double dx = p[0] - center[0], dy = p[1] - center[1];
                double ca = std::cos(a), sa = std::sin(a);
                p[0] = center[0] + ca * dx - sa * dy;
                p[1] = center[1] + sa * dx + ca * dy;
                break;
            }
            case GestureKind::grab:
            case GestureKind::pinch:
                if (contracts[q]) {
                    double scale = 1.0 - contraction * phase;
                    for (int a = 0; a < 3; ++a)
                        p[a] = center[a] + (p[a] - center[a]) * scale;
                }
                break;
            }
            for (int a = 0; a < 3; ++a) out[q * 3 + a] = p[a] + offset[a];
        }
        if (noise > 0.0)
            for (std::size_t i = 0; i < j * 3; ++i) out[i] += noise * rng.gaussian();
    }
    return seq;
}

std::vector<SkeletonSequence> generate_synthetic(const SyntheticSpec& spec,
                                                 const SkeletonTopology& topology) {
    if (spec.classes.size() < 2)
        throw std::invalid_argument("synthetic spec needs at least 2 classes");
    if (spec.samples_per_class == 0)
        throw std::invalid_argument("synthetic spec needs samples_per_class > 0");
    std::vector<SkeletonSequence> out;
    out.reserve(spec.classes.size() * spec.samples_per_class);
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
            Rng rng(mix_seed(spec.seed, 0x73796e7468ULL, i));
            out.push_back(generate_gesture(spec.classes[c].kind, topology, c, spec.noise, rng));
        }
    }
    return out;
}

void write_synthetic_dataset(const SyntheticSpec& spec, const std::string& out_root,
                             double train_fraction) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw std::invalid_argument("train_fraction must lie in (0,1)");
    auto topology = build_hand_topology(spec.topology);
    auto seqs = generate_synthetic(spec, topology);
    std::size_t per_class = spec.samples_per_class;
    std::size_t ntrain = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(per_class)));
    char name[64];
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            const char* split = i < ntrain ? "train" : "test";
            fs::path dir = fs::path(out_root) / split / spec.classes[c].name;
            fs::create_directories(dir);
            std::snprintf(name, sizeof(name), "%s_%03zu.skl", spec.classes[c].name.c_str(), i);
            save_sequence((dir / name).string(), seqs[c * per_class + i]);
        }
    }
}

SyntheticDatasetSpec parse_synthetic_spec(const KeyValues& kv, const std::string& source) {
    ConfigReader r(kv, source);
    SyntheticDatasetSpec out;

    const std::string classes = r.get_string("classes", "");
    if (classes.empty()) {
        out.spec.classes = default_synthetic_classes();
    } else {
        std::size_t pos = 0;
        while (pos <= classes.size()) {
            std::size_t comma = classes.find(',', pos);
            if (comma == std::string::npos) comma = classes.size();
            std::string name = classes.substr(pos, comma - pos);
            const std::size_t a = name.find_first_not_of(" \t");
            const std::size_t b = name.find_last_not_of(" \t");
            if (a == std::string::npos)
                throw std::runtime_error(source + ": empty class name in 'classes'");
            name = name.substr(a, b - a + 1);
            out.spec.classes.push_back(SyntheticClassSpec{name, gesture_kind_from_name(name)});
            pos = comma + 1;
        }
    }

    out.spec.noise = r.get_double("noise", out.spec.noise);
    out.spec.samples_per_class = r.get_count("samples_per_class", 50);
    out.spec.seed = r.get_u64("seed", out.spec.seed);
    out.spec.topology = topology_kind_from_name(r.get_string("topology", "dhg22"));
    out.train_fraction = r.get_double("train_fraction", out.train_fraction);
    r.finish();

    if (out.spec.noise < 0.0)
        throw std::runtime_error(source + ": noise must be non-negative");
    return out;
}

} // namespace gestnet
