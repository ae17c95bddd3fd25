#ifndef GESTNET_CHECKPOINT_HPP
#define GESTNET_CHECKPOINT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gestnet/indrnn.hpp"
#include "gestnet/sagcn.hpp"
#include "gestnet/skeleton.hpp"

namespace gestnet {

struct TensorRecord {
    std::string name;
    Shape shape;
    std::vector<double> values;
};

// text container: one magic line, then per tensor a `name dims...` line
// followed by one line of row-major values
void write_checkpoint(const std::string& path, const std::vector<TensorRecord>& records);
std::vector<TensorRecord> read_checkpoint(const std::string& path);

// one trained stream: exactly one of the two networks is populated
struct StreamModel {
    std::string stream; // "sagcn" | "rbi"
    TopologyKind topology = TopologyKind::dhg22;
    bool center_wrist = false; // preprocessing baked in at training time
    std::optional<SagcnNetwork> sagcn;
    std::optional<RbiNetwork> rbi;

    std::size_t joints() const;
    std::size_t num_classes() const;
};

StreamModel make_stream_model(const std::string& stream, TopologyKind topology,
                              std::size_t num_classes, const SagcnConfig& sagcn_config,
                              const RbiConfig& rbi_config, std::uint64_t seed);

struct NamedBuffer {
    std::string name;
    Shape shape;
    std::vector<double>* data;
};

// every buffer that defines the trained model: parameters plus
// batch-norm running statistics
std::vector<NamedBuffer> model_state_refs(StreamModel& model);

std::vector<std::vector<double>> snapshot_state(StreamModel& model);
void restore_state(StreamModel& model, const std::vector<std::vector<double>>& snapshot);

void save_model(const std::string& path, StreamModel& model);
StreamModel load_model(const std::string& path);

} // namespace gestnet

#endif
