#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gestnet/dataset.hpp"
#include "gestnet/rng.hpp"
#include "gestnet/skeleton.hpp"
#include "gestnet/synthetic.hpp"

using namespace gestnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* tag) {
    fs::path dir = fs::temp_directory_path() / (std::string("gestnet_test_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

SkeletonSequence random_sequence(std::size_t joints, std::size_t frames, Rng& rng) {
    SkeletonSequence seq;
    seq.joints = joints;
    seq.frames.resize(frames * joints * 3);
    for (double& v : seq.frames) v = rng.uniform(-1.0, 1.0);
    return seq;
}

} // namespace

TEST_CASE("sequence files: minimal parse, arity errors, round-trip") {
    fs::path dir = scratch_dir("seqio");

    write_text(dir / "ok.skl", "2 2 3\n0 0 0 1 1 1\n0.5 0.5 0.5 2 2 2\n");
    SkeletonSequence s = load_sequence((dir / "ok.skl").string());
    CHECK(s.joints == 2);
    CHECK(s.frame_count() == 2);
    CHECK(s.label == 3);
    CHECK(s.subject == -1);
    CHECK(s.finger_mode.empty());
    CHECK(s.frame(1)[0] == 0.5);
    CHECK(s.frame(1)[3] == 2.0);

    write_text(dir / "meta.skl", "1 1 0 7 whole\n1 2 3\n");
    SkeletonSequence m = load_sequence((dir / "meta.skl").string());
    CHECK(m.subject == 7);
    CHECK(m.finger_mode == "whole");

    // frame line with 5 numbers when J=2 needs 6
    write_text(dir / "arity.skl", "2 1 0\n1 2 3 4 5\n");
    try {
        load_sequence((dir / "arity.skl").string());
        FAIL("expected arity error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }

    write_text(dir / "nan.skl", "1 1 0\n1 nan 3\n");
    CHECK_THROWS(load_sequence((dir / "nan.skl").string()));
    write_text(dir / "header.skl", "banana\n");
    CHECK_THROWS(load_sequence((dir / "header.skl").string()));
    CHECK_THROWS(load_sequence((dir / "missing.skl").string()));

    Rng rng(12);
    SkeletonSequence orig = random_sequence(5, 9, rng);
    orig.label = 4;
    orig.subject = 2;
    orig.finger_mode = "one";
    save_sequence((dir / "rt.skl").string(), orig);
    SkeletonSequence back = load_sequence((dir / "rt.skl").string());
    CHECK(back.joints == orig.joints);
    CHECK(back.label == orig.label);
    CHECK(back.subject == orig.subject);
    CHECK(back.finger_mode == orig.finger_mode);
    CHECK(back.frames == orig.frames); // bit-exact through the text format

    fs::remove_all(dir);
}

TEST_CASE("frame sampling hits the documented index rule") {
    auto idx20 = sample_frame_indices(20, 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(idx20[i] == i);

    auto idx40 = sample_frame_indices(40, 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(idx40[i] == 2 * i);

    auto idx7 = sample_frame_indices(7, 20);
    for (std::size_t i = 0; i < 7; ++i) CHECK(idx7[i] == i);
    for (std::size_t i = 7; i < 20; ++i) CHECK(idx7[i] == 6); // last frame repeated

    auto idx21 = sample_frame_indices(21, 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(idx21[i] == (i * 21) / 20);

    auto idx50 = sample_frame_indices(50, 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(idx50[i] == (i * 50) / 20);
    CHECK(idx50[19] == 47);

    Rng rng(3);
    for (std::size_t t : {1ul, 7ul, 19ul, 20ul, 21ul, 33ul, 50ul}) {
        SkeletonSequence seq = random_sequence(4, t, rng);
        seq.label = 2;
        SkeletonSequence s = sample_frames(seq);
        CHECK(s.frame_count() == 20);
        CHECK(s.label == 2);
        auto idx = sample_frame_indices(t, 20);
        for (std::size_t i = 0; i < 20; ++i)
            for (std::size_t q = 0; q < 4 * 3; ++q)
                CHECK(s.frame(i)[q] == seq.frame(idx[i])[q]);

        // idempotent: sampling a sampled sequence changes nothing
        SkeletonSequence twice = sample_frames(s);
        CHECK(twice.frames == s.frames);
    }

    SkeletonSequence empty;
    empty.joints = 4;
    CHECK_THROWS(sample_frames(empty));
}

TEST_CASE("displacement features: static, constant velocity, subtraction oracle") {
    SkeletonSequence still;
    still.joints = 3;
    still.frames.assign(20 * 3 * 3, 0.75);
    auto zero = displacement_features(still);
    for (double v : zero) CHECK(v == 0.0);

    SkeletonSequence moving;
    moving.joints = 2;
    moving.frames.resize(20 * 2 * 3);
    const double v[3] = {0.1, -0.2, 0.05};
    for (std::size_t t = 0; t < 20; ++t)
        for (std::size_t q = 0; q < 2; ++q)
            for (int a = 0; a < 3; ++a)
                moving.frame(t)[q * 3 + a] = 10.0 + v[a] * static_cast<double>(t);
    auto deltas = displacement_features(moving);
    for (std::size_t q = 0; q < 2 * 3; ++q) CHECK(deltas[q] == 0.0); // first frame
    for (std::size_t t = 1; t < 20; ++t)
        for (std::size_t q = 0; q < 2; ++q)
            for (int a = 0; a < 3; ++a)
                CHECK(deltas[(t * 2 + q) * 3 + a] ==
                      doctest::Approx(v[a]).epsilon(1e-12));

    Rng rng(8);
    SkeletonSequence toy = random_sequence(3, 20, rng);
    auto d = displacement_features(toy);
    for (std::size_t t = 1; t < 20; ++t)
        for (std::size_t q = 0; q < 9; ++q)
            CHECK(d[t * 9 + q] == toy.frame(t)[q] - toy.frame(t - 1)[q]);

    // recurrent rows are [coordinates || deltas]
    auto rec = recurrent_features(toy);
    REQUIRE(rec.size() == 20 * 6 * 3);
    for (std::size_t t = 0; t < 20; ++t)
        for (std::size_t q = 0; q < 9; ++q) {
            CHECK(rec[t * 18 + q] == toy.frame(t)[q]);
            CHECK(rec[t * 18 + 9 + q] == d[t * 9 + q]);
        }
}

TEST_CASE("mean pose averages each joint over frames") {
    Rng rng(21);
    SkeletonSequence seq = random_sequence(4, 6, rng);
    ReferencePose pose = mean_pose(seq);
    REQUIRE(pose.joint_count() == 4);
    for (std::size_t q = 0; q < 4; ++q)
        for (int a = 0; a < 3; ++a) {
            double sum = 0.0;
            for (std::size_t t = 0; t < 6; ++t) sum += seq.frame(t)[q * 3 + a];
            CHECK(pose.coordinates[q][a] == doctest::Approx(sum / 6.0).epsilon(1e-14));
        }
}

TEST_CASE("batches carry both layouts from the same sampled frames") {
    SkeletonTopology topo = build_hand_topology(TopologyKind::dhg22);
    Rng rng(5005);
    SkeletonSequence s1 = random_sequence(22, 33, rng);
    s1.label = 1;
    SkeletonSequence s2 = random_sequence(22, 7, rng);
    s2.label = 5;
    GestureBatch batch = make_batch({&s1, &s2}, topo);

    REQUIRE(batch.size() == 2);
    CHECK(batch.labels[0] == 1);
    CHECK(batch.labels[1] == 5);
    REQUIRE(batch.coordinates.shape() == Shape{2, 3, 20, 22});
    REQUIRE(batch.recurrent.shape() == Shape{2, 20, 132});
    REQUIRE(batch.a0.shape() == Shape{22, 22});
    REQUIRE(batch.a1.shape() == Shape{2, 22, 22});
    REQUIRE(batch.a2.shape() == Shape{2, 22, 22});

    const SkeletonSequence* raws[2] = {&s1, &s2};
    for (std::size_t b = 0; b < 2; ++b) {
        SkeletonSequence sampled = sample_frames(*raws[b]);
        // SAGCN layout equals the sampled frames, channel-major
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t t = 0; t < 20; ++t)
                for (std::size_t q = 0; q < 22; ++q)
                    CHECK(batch.coordinates.at({b, c, t, q}) == sampled.frame(t)[q * 3 + c]);

        // coordinates reconstructed from the recurrent layout match exactly
        for (std::size_t t = 0; t < 20; ++t)
            for (std::size_t q = 0; q < 22 * 3; ++q)
                CHECK(batch.recurrent.at({b, t, q}) == sampled.frame(t)[q]);

        // per-sample adjacency comes from the sampled sequence's mean pose
        PartitionedAdjacency part = partition_adjacency(topo, mean_pose(sampled));
        normalize_adjacency(part);
        for (std::size_t i = 0; i < 22 * 22; ++i) {
            CHECK(batch.a1.values()[b * 22 * 22 + i] == part.normalized[1][i]);
            CHECK(batch.a2.values()[b * 22 * 22 + i] == part.normalized[2][i]);
        }
    }
    for (std::size_t r = 0; r < 22; ++r)
        for (std::size_t c = 0; c < 22; ++c)
            CHECK(batch.a0.at({r, c}) == (r == c ? 1.0 : 0.0));

    // wrist centering zeroes the wrist channel in every frame
    GestureBatch centered = make_batch({&s1}, topo, true);
    std::size_t wrist = wrist_joint(topo);
    SkeletonSequence sampled = sample_frames(s1);
    for (std::size_t t = 0; t < 20; ++t)
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(centered.coordinates.at({0, c, t, wrist}) == 0.0);
            // other joints are shifted by the wrist position of that frame
            CHECK(centered.coordinates.at({0, c, t, 3}) ==
                  doctest::Approx(sampled.frame(t)[3 * 3 + c] - sampled.frame(t)[wrist * 3 + c])
                      .epsilon(1e-12));
        }

    SkeletonSequence wrong = random_sequence(21, 20, rng);
    CHECK_THROWS(make_batch({&wrong}, topo));
    CHECK_THROWS(make_batch({}, topo));
}

TEST_CASE("fixed-count split: 2800 sequences give 1862/98/840") {
    std::vector<SequenceRef> refs;
    std::vector<std::string> classes;
    for (int c = 0; c < 14; ++c) classes.push_back("g" + std::to_string(c));
    char buf[64];
    for (int i = 0; i < 2800; ++i) {
        std::snprintf(buf, sizeof(buf), "seq_%04d.skl", i);
        refs.push_back({buf, static_cast<std::size_t>(i % 14)});
    }

    SplitConfig cfg;
    cfg.protocol = SplitProtocol::dhg_fixed_count;
    cfg.seed = 42;
    DatasetSplits splits = build_split(refs, classes, cfg);

    CHECK(splits.train.size() + splits.val.size() == 1960);
    CHECK(splits.val.size() == 98); // floor(0.05 * 1960)
    CHECK(splits.test.size() == 840);

    // disjoint and exhaustive
    std::set<std::string> all;
    for (const auto* part : {&splits.train, &splits.val, &splits.test})
        for (const auto& r : *part) CHECK(all.insert(r.path).second);
    CHECK(all.size() == 2800);

    // deterministic under the same seed, different under another
    DatasetSplits again = build_split(refs, classes, cfg);
    REQUIRE(again.train.size() == splits.train.size());
    for (std::size_t i = 0; i < splits.train.size(); ++i)
        CHECK(again.train[i].path == splits.train[i].path);
    for (std::size_t i = 0; i < splits.test.size(); ++i)
        CHECK(again.test[i].path == splits.test[i].path);

    SplitConfig other = cfg;
    other.seed = 43;
    DatasetSplits moved = build_split(refs, classes, other);
    bool any_difference = false;
    for (std::size_t i = 0; i < splits.test.size(); ++i)
        if (moved.test[i].path != splits.test[i].path) any_difference = true;
    CHECK(any_difference);

    // too few sequences for the fixed pool
    std::vector<SequenceRef> few(refs.begin(), refs.begin() + 100);
    CHECK_THROWS(build_split(few, classes, cfg));
}

TEST_CASE("fpha split takes a 600-sequence training pool") {
    std::vector<SequenceRef> refs;
    std::vector<std::string> classes{"a", "b"};
    char buf[32];
    for (int i = 0; i < 1175; ++i) {
        std::snprintf(buf, sizeof(buf), "f%04d.skl", i);
        refs.push_back({buf, static_cast<std::size_t>(i % 2)});
    }
    SplitConfig cfg;
    cfg.protocol = SplitProtocol::fpha_standard;
    DatasetSplits splits = build_split(refs, classes, cfg);
    CHECK(splits.train.size() + splits.val.size() == 600);
    CHECK(splits.val.size() == 30);
    CHECK(splits.test.size() == 575);
}

TEST_CASE("stratified random split respects per-class fractions and warns on gaps") {
    std::vector<SequenceRef> refs;
    std::vector<std::string> classes{"left", "right"};
    char buf[32];
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 10; ++i) {
            std::snprintf(buf, sizeof(buf), "c%d_%02d.skl", c, i);
            refs.push_back({buf, static_cast<std::size_t>(c)});
        }
    SplitConfig cfg;
    cfg.protocol = SplitProtocol::synthetic_random;
    cfg.train_fraction = 0.8;
    cfg.val_fraction = 0.0;
    DatasetSplits splits = build_split(refs, classes, cfg);
    CHECK(splits.train.size() == 16);
    CHECK(splits.val.empty());
    CHECK(splits.test.size() == 4);
    std::size_t per_class[2] = {0, 0};
    for (const auto& r : splits.test) ++per_class[r.label];
    CHECK(per_class[0] == 2);
    CHECK(per_class[1] == 2);
    CHECK(splits.warnings.empty());

    // a class with no sequences anywhere is reported, not fatal
    std::vector<std::string> three{"left", "right", "ghost"};
    DatasetSplits gappy = build_split(refs, three, cfg);
    CHECK(!gappy.warnings.empty());
    bool mentions_ghost = false;
    for (const auto& w : gappy.warnings)
        if (w.find("ghost") != std::string::npos) mentions_ghost = true;
    CHECK(mentions_ghost);
}

TEST_CASE("dataset directory loading honors on-disk splits and the manifest lists all") {
    fs::path dir = scratch_dir("dataroot");
    SkeletonSequence tiny;
    tiny.joints = 2;
    tiny.frames = {0, 0, 0, 1, 1, 1};
    for (const char* split : {"train", "test"})
        for (const char* cls : {"alpha", "beta"}) {
            fs::create_directories(dir / split / cls);
            for (int i = 0; i < (std::string(split) == "train" ? 4 : 2); ++i)
                save_sequence((dir / split / cls / ("s" + std::to_string(i) + ".skl")).string(),
                              tiny);
        }

    SplitConfig cfg;
    cfg.val_fraction = 0.25; // carved from train/ because no val/ exists
    DatasetSplits splits = load_dataset(dir.string(), cfg);
    CHECK(splits.class_names == std::vector<std::string>{"alpha", "beta"});
    CHECK(splits.train.size() + splits.val.size() == 8);
    CHECK(splits.val.size() == 2); // floor(0.25 * 8)
    CHECK(splits.test.size() == 4);

    // labels follow the sorted class-name order
    for (const auto& r : splits.test) {
        bool is_beta = r.path.find("beta") != std::string::npos;
        CHECK(r.label == (is_beta ? 1u : 0u));
    }

    std::ostringstream manifest;
    export_manifest(manifest, splits);
    std::istringstream lines(manifest.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "path,class,label,split");
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        CHECK(line.find(".skl,") != std::string::npos);
    }
    CHECK(rows == 12);

    auto seqs = load_all(splits.test, 2);
    CHECK(seqs.size() == 4);
    CHECK_THROWS(load_all(splits.test, 22)); // joint-count mismatch reported per file

    CHECK_THROWS(load_dataset((dir / "nope").string(), cfg));
    fs::remove_all(dir);
}

TEST_CASE("synthetic gestures obey their construction rules") {
    SkeletonTopology topo = build_hand_topology(TopologyKind::dhg22);

    for (int k = 0; k <= static_cast<int>(GestureKind::pinch); ++k) {
        auto kind = static_cast<GestureKind>(k);
        CHECK(gesture_kind_from_name(gesture_kind_name(kind)) == kind);
        Rng rng(900 + k);
        SkeletonSequence seq = generate_gesture(kind, topo, 3, 0.0, rng);
        CHECK(seq.frame_count() >= 20);
        CHECK(seq.frame_count() <= 50);
        CHECK(seq.label == 3);
        CHECK(seq.joints == 22);
    }
    CHECK_THROWS(gesture_kind_from_name("wave"));

    // noise 0, swipe_right: every joint's x strictly increases frame to frame
    Rng rng(55);
    SkeletonSequence right = generate_gesture(GestureKind::swipe_right, topo, 0, 0.0, rng);
    for (std::size_t t = 1; t < right.frame_count(); ++t)
        for (std::size_t q = 0; q < 22; ++q)
            CHECK(right.frame(t)[q * 3] > right.frame(t - 1)[q * 3]);

    Rng rng2(55);
    SkeletonSequence left = generate_gesture(GestureKind::swipe_left, topo, 0, 0.0, rng2);
    for (std::size_t t = 1; t < left.frame_count(); ++t)
        for (std::size_t q = 0; q < 22; ++q)
            CHECK(left.frame(t)[q * 3] < left.frame(t - 1)[q * 3]);
    // same parameter block: the two swipes mirror about the start position
    REQUIRE(left.frame_count() == right.frame_count());
    for (std::size_t t = 0; t < left.frame_count(); ++t)
        for (std::size_t q = 0; q < 22; ++q) {
            CHECK(left.frame(t)[q * 3 + 1] == right.frame(t)[q * 3 + 1]);
            CHECK(left.frame(t)[q * 3] - left.frame(0)[q * 3] ==
                  doctest::Approx(-(right.frame(t)[q * 3] - right.frame(0)[q * 3]))
                      .epsilon(1e-12));
        }

    Rng up_rng(56);
    SkeletonSequence up = generate_gesture(GestureKind::swipe_up, topo, 0, 0.0, up_rng);
    for (std::size_t t = 1; t < up.frame_count(); ++t)
        for (std::size_t q = 0; q < 22; ++q)
            CHECK(up.frame(t)[q * 3 + 1] > up.frame(t - 1)[q * 3 + 1]);
}

TEST_CASE("rotations mirror and contractions share the wrist at noise 0") {
    SkeletonTopology topo = build_hand_topology(TopologyKind::dhg22);
    ReferencePose base = canonical_rest_pose(topo);
    auto center = gravity_center(base);

    Rng ra(321), rb(321);
    SkeletonSequence cw = generate_gesture(GestureKind::rotation_cw, topo, 0, 0.0, ra);
    SkeletonSequence ccw = generate_gesture(GestureKind::rotation_ccw, topo, 0, 0.0, rb);
    REQUIRE(cw.frame_count() == ccw.frame_count());
    // identical parameter blocks include the shared rigid offset; recover it
    // from the first frame, where the rotation angle is zero
    double off[3];
    for (int a = 0; a < 3; ++a) off[a] = cw.frame(0)[a] - base.coordinates[0][a];
    for (std::size_t t = 0; t < cw.frame_count(); ++t)
        for (std::size_t q = 0; q < 22; ++q) {
            double ux = base.coordinates[q][0] - center[0];
            double uy = base.coordinates[q][1] - center[1];
            double ax = cw.frame(t)[q * 3] - off[0] - center[0];
            double ay = cw.frame(t)[q * 3 + 1] - off[1] - center[1];
            double bx = ccw.frame(t)[q * 3] - off[0] - center[0];
            double by = ccw.frame(t)[q * 3 + 1] - off[1] - center[1];
            // equal radius, opposite signed angle relative to the base pose,
            // untouched vertical coordinate
            CHECK(ax * ax + ay * ay == doctest::Approx(ux * ux + uy * uy).epsilon(1e-9));
            CHECK(ux * ax + uy * ay == doctest::Approx(ux * bx + uy * by).epsilon(1e-9));
            CHECK(ux * ay - uy * ax == doctest::Approx(-(ux * by - uy * bx)).epsilon(1e-9));
            CHECK(cw.frame(t)[q * 3 + 2] == ccw.frame(t)[q * 3 + 2]);
        }

    Rng rg(654), rp(654);
    SkeletonSequence grab = generate_gesture(GestureKind::grab, topo, 0, 0.0, rg);
    SkeletonSequence pinch = generate_gesture(GestureKind::pinch, topo, 0, 0.0, rp);
    REQUIRE(grab.frame_count() == pinch.frame_count());
    std::size_t wrist = wrist_joint(topo);
    bool middle_differs = false;
    for (std::size_t t = 0; t < grab.frame_count(); ++t) {
        for (int a = 0; a < 3; ++a) {
            CHECK(grab.frame(t)[wrist * 3 + a] == pinch.frame(t)[wrist * 3 + a]);
            // thumb and index contract in both gestures
            CHECK(grab.frame(t)[5 * 3 + a] == pinch.frame(t)[5 * 3 + a]);
            CHECK(grab.frame(t)[9 * 3 + a] == pinch.frame(t)[9 * 3 + a]);
        }
        if (grab.frame(t)[13 * 3] != pinch.frame(t)[13 * 3]) middle_differs = true;
    }
    CHECK(middle_differs); // grab curls the middle finger, pinch leaves it

    CHECK_THROWS(generate_gesture(GestureKind::grab, topo, 0, -0.1, rg));
}

TEST_CASE("synthetic generation is bit-deterministic and spec-driven") {
    SkeletonTopology topo = build_hand_topology(TopologyKind::dhg22);
    SyntheticSpec spec;
    spec.classes = default_synthetic_classes();
    REQUIRE(spec.classes.size() == 8);
    spec.noise = 0.05;
    spec.samples_per_class = 3;
    spec.seed = 99;

    auto a = generate_synthetic(spec, topo);
    auto b = generate_synthetic(spec, topo);
    REQUIRE(a.size() == 24);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].label == i / 3);
        CHECK(a[i].frames == b[i].frames);
    }

    SyntheticSpec bad = spec;
    bad.classes.resize(1);
    CHECK_THROWS(generate_synthetic(bad, topo));
    SyntheticSpec none = spec;
    none.samples_per_class = 0;
    CHECK_THROWS(generate_synthetic(none, topo));
}

TEST_CASE("synthetic spec files parse with defaults and reject junk") {
    auto kv = parse_key_values("noise = 0.01\nsamples_per_class = 4\nseed = 5\n", "spec");
    SyntheticDatasetSpec spec = parse_synthetic_spec(kv, "spec");
    CHECK(spec.spec.classes.size() == 8);
    CHECK(spec.spec.noise == 0.01);
    CHECK(spec.spec.samples_per_class == 4);
    CHECK(spec.spec.seed == 5);
    CHECK(spec.train_fraction == 0.8);

    auto kv2 = parse_key_values("classes = grab, pinch\ntrain_fraction = 0.5\n", "spec");
    SyntheticDatasetSpec two = parse_synthetic_spec(kv2, "spec");
    REQUIRE(two.spec.classes.size() == 2);
    CHECK(two.spec.classes[0].kind == GestureKind::grab);
    CHECK(two.spec.classes[1].name == "pinch");
    CHECK(two.train_fraction == 0.5);

    CHECK_THROWS(parse_synthetic_spec(parse_key_values("zzz = 1\n", "spec"), "spec"));
    CHECK_THROWS(parse_synthetic_spec(parse_key_values("noise = -1\n", "spec"), "spec"));
    CHECK_THROWS(parse_synthetic_spec(parse_key_values("classes = wave\n", "spec"), "spec"));
}

TEST_CASE("written synthetic datasets load back with the documented layout") {
    fs::path dir = scratch_dir("synthout");
    SyntheticSpec spec;
    spec.classes = {{"grab", GestureKind::grab}, {"pinch", GestureKind::pinch}};
    spec.noise = 0.01;
    spec.samples_per_class = 5;
    spec.seed = 17;
    write_synthetic_dataset(spec, dir.string(), 0.6);

    CHECK(fs::exists(dir / "train" / "grab" / "grab_000.skl"));
    CHECK(fs::exists(dir / "test" / "pinch" / "pinch_004.skl"));

    SplitConfig cfg;
    cfg.val_fraction = 0.0;
    DatasetSplits splits = load_dataset(dir.string(), cfg);
    CHECK(splits.class_names == std::vector<std::string>{"grab", "pinch"});
    CHECK(splits.train.size() == 6); // floor(0.6 * 5) per class
    CHECK(splits.test.size() == 4);

    auto seqs = load_all(splits.train, 22);
    for (const auto& s : seqs) {
        CHECK(s.frame_count() >= 20);
        CHECK(s.frame_count() <= 50);
    }

    CHECK_THROWS(write_synthetic_dataset(spec, dir.string(), 1.5));
    fs::remove_all(dir);
}
