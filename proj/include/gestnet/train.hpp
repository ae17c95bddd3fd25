#ifndef GESTNET_TRAIN_HPP
#define GESTNET_TRAIN_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gestnet/checkpoint.hpp"
#include "gestnet/config.hpp"
#include "gestnet/dataset.hpp"

namespace gestnet {

struct TrainConfig {
    std::string stream = "sagcn"; // sagcn | rbi
    std::size_t batch_size = 64;
    double lr = 2e-3;     // rbi default: 2e-4
    double dropout = 0.5; // rbi default: 0.2
    std::size_t max_epochs = 300;
    double lr_decay = 0.1;
    std::string decay_policy = "plateau"; // plateau | literal
    std::size_t plateau_patience = 10;
    std::size_t early_stop_patience = 50; // 0 disables
    double target_train_acc = 0.0;        // stop once reached; 0 disables
    std::uint64_t seed = 0;

    // data handling
    std::string protocol = "synthetic_random";
    double train_fraction = 0.8;
    double val_fraction = 0.05;
    bool center_wrist = false;
    std::string topology = "auto"; // auto | dhg22 | fpha21

    // architecture knobs (sagcn)
    std::vector<std::size_t> channels = {64, 64, 128, 128, 256, 256};
    std::size_t stride2_unit = 3;
    std::size_t kt = 9;
    bool unit_shortcut = true;
    // architecture knobs (rbi)
    std::size_t neurons = 512;
    std::size_t blocks = 6;
    std::size_t clamp_t = 20;
};

// Applies per-stream defaults (lr, dropout, batch size), then the file's keys.
// `cli_stream` (when non-empty) wins over a `stream` key in the file.
TrainConfig parse_train_config(const KeyValues& kv, const std::string& source,
                               const std::string& cli_stream = "");
void validate_train_config(const TrainConfig& config);

SplitConfig split_config_from(const TrainConfig& config);

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    StreamModel model; // best-validation state
    std::vector<EpochRecord> history;
    double best_val_acc = 0.0;
    std::size_t best_epoch = 0;
    std::vector<std::string> class_names;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train_stream(const DatasetSplits& splits, const TrainConfig& config,
                         const EpochCallback& on_epoch = {});

// --- evaluation -----------------------------------------------------------------

struct EvalReport {
    double accuracy = 0.0;
    std::vector<double> per_class_accuracy;           // empty classes report 0
    std::vector<std::vector<std::size_t>> confusion;  // row = true class
    std::vector<std::vector<double>> scores;          // per-sequence class probabilities
    std::vector<std::size_t> predicted;
    std::vector<std::size_t> labels;
    std::size_t total = 0;
};

// class-probability vectors for every sequence, in input order
std::vector<std::vector<double>> stream_scores(StreamModel& model,
                                               const std::vector<SkeletonSequence>& seqs,
                                               std::size_t batch_size = 64);

std::vector<double> fuse_scores(const std::vector<double>& v1, const std::vector<double>& v2);
std::size_t argmax_lowest(const std::vector<double>& v);
// elementwise product of the two probability vectors, argmax, ties to the
// lower index
std::size_t fuse_and_classify(const std::vector<double>& v1, const std::vector<double>& v2);

EvalReport report_from_scores(const std::vector<std::vector<double>>& scores,
                              const std::vector<std::size_t>& labels, std::size_t num_classes);

EvalReport evaluate(StreamModel& model, const std::vector<SkeletonSequence>& seqs,
                    std::size_t batch_size = 64);
EvalReport evaluate_fused(StreamModel& first, StreamModel& second,
                          const std::vector<SkeletonSequence>& seqs,
                          std::size_t batch_size = 64);

// --- reports ----------------------------------------------------------------------

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history);
void write_confusion_csv(std::ostream& os, const EvalReport& report,
                         const std::vector<std::string>& class_names);
void write_scores_csv(std::ostream& os, const EvalReport& report,
                      const std::vector<std::string>& class_names);

std::string format_double(double v); // shortest round-trip decimal

} // namespace gestnet

#endif
