#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <stdexcept>

#include "gestnet/dataset.hpp"
#include "gestnet/indrnn.hpp"
#include "gestnet/ops.hpp"
#include "gestnet/sagcn.hpp"
#include "gestnet/skeleton.hpp"
#include "gestnet/synthetic.hpp"
#include "gestnet/train.hpp"

namespace py = pybind11;
using namespace gestnet;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor_from(const DoubleArray& a) {
    Shape shape(static_cast<std::size_t>(a.ndim()));
    for (py::ssize_t i = 0; i < a.ndim(); ++i)
        shape[static_cast<std::size_t>(i)] = static_cast<std::size_t>(a.shape(i));
    std::vector<double> values(a.data(), a.data() + a.size());
    return Tensor(std::move(shape), std::move(values));
}

py::array_t<double> array_from(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> out(shape);
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

py::array_t<double> array_from_flat(const std::vector<double>& v,
                                    std::vector<py::ssize_t> shape) {
    py::array_t<double> out(shape);
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

SkeletonSequence sequence_from(const DoubleArray& frames) {
    if (frames.ndim() != 3 || frames.shape(2) != 3)
        throw std::invalid_argument("frames must be a [T,J,3] array");
    SkeletonSequence seq;
    seq.joints = static_cast<std::size_t>(frames.shape(1));
    seq.frames.assign(frames.data(), frames.data() + frames.size());
    return seq;
}

py::array_t<double> frames_array(const SkeletonSequence& seq) {
    return array_from_flat(seq.frames,
                           {static_cast<py::ssize_t>(seq.frame_count()),
                            static_cast<py::ssize_t>(seq.joints), 3});
}

ReferencePose pose_from(const DoubleArray& pose) {
    if (pose.ndim() != 2 || pose.shape(1) != 3)
        throw std::invalid_argument("pose must be a [J,3] array");
    ReferencePose out;
    out.coordinates.resize(static_cast<std::size_t>(pose.shape(0)));
    const double* p = pose.data();
    for (auto& joint : out.coordinates) {
        joint = {p[0], p[1], p[2]};
        p += 3;
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_gestnet, m) {
    m.doc() = "two-stream skeleton gesture recognition core";

    m.def("hand_topology",
          [](const std::string& name) {
              const SkeletonTopology topo = build_hand_topology(topology_kind_from_name(name));
              return py::make_tuple(topo.joint_count, topo.edges);
          },
          py::arg("name"), "joint count and edge list of a named hand topology");

    m.def("partitioned_adjacency",
          [](const std::string& name, const DoubleArray& pose) {
              const SkeletonTopology topo = build_hand_topology(topology_kind_from_name(name));
              PartitionedAdjacency parts = partition_adjacency(topo, pose_from(pose));
              normalize_adjacency(parts);
              const py::ssize_t j = static_cast<py::ssize_t>(topo.joint_count);
              py::dict out;
              py::list normalized, unnormalized;
              for (std::size_t k = 0; k < 3; ++k) {
                  normalized.append(array_from_flat(parts.normalized[k], {j, j}));
                  unnormalized.append(array_from_flat(parts.unnormalized[k], {j, j}));
              }
              out["normalized"] = normalized;
              out["unnormalized"] = unnormalized;
              return out;
          },
          py::arg("topology"), py::arg("pose"),
          "identity / centripetal / centrifugal adjacency for a reference pose");

    m.def("sample_frame_indices", &sample_frame_indices, py::arg("t"), py::arg("target") = 20);

    m.def("sample_frames",
          [](const DoubleArray& frames, std::size_t target) {
              return frames_array(sample_frames(sequence_from(frames), target));
          },
          py::arg("frames"), py::arg("target") = 20);

    m.def("displacement_features",
          [](const DoubleArray& frames) {
              const SkeletonSequence seq = sequence_from(frames);
              return array_from_flat(displacement_features(seq),
                                     {static_cast<py::ssize_t>(seq.frame_count()),
                                      static_cast<py::ssize_t>(seq.joints), 3});
          },
          py::arg("frames"));

    m.def("recurrent_features",
          [](const DoubleArray& frames) {
              const SkeletonSequence seq = sequence_from(frames);
              return array_from_flat(recurrent_features(seq),
                                     {static_cast<py::ssize_t>(seq.frame_count()),
                                      static_cast<py::ssize_t>(6 * seq.joints)});
          },
          py::arg("frames"));

    m.def("generate_gesture",
          [](const std::string& kind, const std::string& topology, double noise,
             std::uint64_t seed) {
              const SkeletonTopology topo = build_hand_topology(topology_kind_from_name(topology));
              Rng rng(seed);
              return frames_array(
                  generate_gesture(gesture_kind_from_name(kind), topo, 0, noise, rng));
          },
          py::arg("kind"), py::arg("topology") = "dhg22", py::arg("noise") = 0.0,
          py::arg("seed") = 0, "one synthetic gesture as a [T,J,3] array");

    m.def("write_synthetic_dataset",
          [](const std::string& out_dir, std::size_t samples_per_class, double noise,
             std::uint64_t seed, const std::string& topology, double train_fraction) {
              SyntheticSpec spec;
              spec.classes = default_synthetic_classes();
              spec.noise = noise;
              spec.samples_per_class = samples_per_class;
              spec.seed = seed;
              spec.topology = topology_kind_from_name(topology);
              write_synthetic_dataset(spec, out_dir, train_fraction);
          },
          py::arg("out_dir"), py::arg("samples_per_class") = 50, py::arg("noise") = 0.0,
          py::arg("seed") = 0, py::arg("topology") = "dhg22", py::arg("train_fraction") = 0.8,
          "write the eight-class synthetic dataset to a directory");

    m.def("attention_map",
          [](const DoubleArray& x, const DoubleArray& w) {
              return array_from(attention_map(tensor_from(x), tensor_from(w)));
          },
          py::arg("x"), py::arg("w"),
          "row-stochastic joint-collaboration map of [.., C, T, J] features");

    m.def("indrnn",
          [](const DoubleArray& x, const DoubleArray& w, const DoubleArray& u,
             const DoubleArray& b) {
              IndRnnLayerParams layer{tensor_from(w), tensor_from(u), tensor_from(b)};
              return array_from(indrnn_forward(tensor_from(x), layer));
          },
          py::arg("x"), py::arg("w"), py::arg("u"), py::arg("b"),
          "h_t = relu(W x_t + u * h_{t-1} + b) over a [T,D] or [B,T,D] input");

    m.def("softmax",
          [](const DoubleArray& x) { return array_from(softmax_last(tensor_from(x))); },
          py::arg("x"), "softmax over the last axis");

    m.def("fuse_scores", &fuse_scores, py::arg("v1"), py::arg("v2"));
    m.def("fuse_and_classify", &fuse_and_classify, py::arg("v1"), py::arg("v2"),
          "argmax of the elementwise product, ties to the lower index");
}
