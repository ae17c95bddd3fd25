#include "gestnet/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "gestnet/adam.hpp"
#include "gestnet/indrnn.hpp"
#include "gestnet/rng.hpp"
#include "gestnet/sagcn.hpp"

namespace gestnet {

namespace {

std::vector<std::size_t> parse_channel_list(const std::string& text, const std::string& source) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string token = text.substr(pos, comma - pos);
        std::size_t value = 0;
        auto res = std::from_chars(token.data(), token.data() + token.size(), value);
        if (res.ec != std::errc() || res.ptr != token.data() + token.size() || value == 0)
            throw std::runtime_error(source + ": key 'channels' must be a comma-separated list "
                                              "of positive integers, got '" +
                                     text + "'");
        out.push_back(value);
        pos = comma + 1;
    }
    return out;
}

TopologyKind resolve_topology(const std::string& name, std::size_t joints_seen) {
    if (name == "auto") {
        if (joints_seen == 22) return TopologyKind::dhg22;
        if (joints_seen == 21) return TopologyKind::fpha21;
        throw std::runtime_error("cannot infer a hand topology for " +
                                 std::to_string(joints_seen) +
                                 " joints; set topology = dhg22 or fpha21");
    }
    TopologyKind kind = topology_kind_from_name(name);
    if (kind == TopologyKind::custom)
        throw std::runtime_error("training requires a named hand topology (dhg22 or fpha21)");
    return kind;
}

std::vector<std::size_t> labels_of(const std::vector<SkeletonSequence>& seqs) {
    std::vector<std::size_t> labels(seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) labels[i] = seqs[i].label;
    return labels;
}

double split_accuracy(StreamModel& model, const std::vector<SkeletonSequence>& seqs,
                      std::size_t batch_size) {
    if (seqs.empty()) return 0.0;
    const auto scores = stream_scores(model, seqs, batch_size);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < seqs.size(); ++i)
        if (argmax_lowest(scores[i]) == seqs[i].label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(seqs.size());
}

} // namespace

TrainConfig parse_train_config(const KeyValues& kv, const std::string& source,
                               const std::string& cli_stream) {
    ConfigReader r(kv, source);
    TrainConfig cfg;

    const std::string file_stream = r.get_string("stream", "");
    if (!cli_stream.empty()) {
        if (!file_stream.empty() && file_stream != cli_stream)
            throw std::runtime_error(source + ": stream '" + file_stream +
                                     "' conflicts with --stream " + cli_stream);
        cfg.stream = cli_stream;
    } else if (!file_stream.empty()) {
        cfg.stream = file_stream;
    }
    if (cfg.stream != "sagcn" && cfg.stream != "rbi")
        throw std::runtime_error("unknown stream '" + cfg.stream + "' (expected sagcn or rbi)");

    if (cfg.stream == "rbi") {
        cfg.lr = 2e-4;
        cfg.dropout = 0.2;
    }
    cfg.protocol = r.get_string("protocol", cfg.protocol);
    if (cfg.protocol == "fpha_standard") cfg.batch_size = 32;

    cfg.batch_size = r.get_count("batch_size", cfg.batch_size);
    cfg.lr = r.get_double("lr", cfg.lr);
    cfg.dropout = r.get_double("dropout", cfg.dropout);
    cfg.max_epochs = r.get_count("max_epochs", cfg.max_epochs);
    cfg.lr_decay = r.get_double("lr_decay", cfg.lr_decay);
    cfg.decay_policy = r.get_string("decay_policy", cfg.decay_policy);
    cfg.plateau_patience = r.get_count("plateau_patience", cfg.plateau_patience);
    cfg.early_stop_patience = r.get_count("early_stop_patience", cfg.early_stop_patience);
    cfg.target_train_acc = r.get_double("target_train_acc", cfg.target_train_acc);
    cfg.seed = r.get_u64("seed", cfg.seed);
    cfg.train_fraction = r.get_double("train_fraction", cfg.train_fraction);
    cfg.val_fraction = r.get_double("val_fraction", cfg.val_fraction);
    cfg.center_wrist = r.get_bool("center_wrist", cfg.center_wrist);
    cfg.topology = r.get_string("topology", cfg.topology);

    const std::string channels = r.get_string("channels", "");
    if (!channels.empty()) cfg.channels = parse_channel_list(channels, source);
    cfg.stride2_unit = r.get_count("stride2_unit", cfg.stride2_unit);
    cfg.kt = r.get_count("kt", cfg.kt);
    cfg.unit_shortcut = r.get_bool("unit_shortcut", cfg.unit_shortcut);
    cfg.neurons = r.get_count("neurons", cfg.neurons);
    cfg.blocks = r.get_count("blocks", cfg.blocks);
    cfg.clamp_t = r.get_count("clamp_t", cfg.clamp_t);

    r.finish();
    validate_train_config(cfg);
    return cfg;
}

void validate_train_config(const TrainConfig& config) {
    auto fail = [](const std::string& what) {
        throw std::invalid_argument("train config: " + what);
    };
    if (config.stream != "sagcn" && config.stream != "rbi")
        fail("stream must be sagcn or rbi");
    if (config.batch_size == 0) fail("batch_size must be positive");
    if (!(config.lr >= 0.0) || !std::isfinite(config.lr)) fail("lr must be non-negative");
    if (!(config.dropout >= 0.0 && config.dropout < 1.0)) fail("dropout must be in [0,1)");
    if (!(config.lr_decay > 0.0 && config.lr_decay < 1.0)) fail("lr_decay must be in (0,1)");
    if (config.decay_policy != "plateau" && config.decay_policy != "literal")
        fail("decay_policy must be plateau or literal");
    if (config.decay_policy == "plateau" && config.plateau_patience == 0)
        fail("plateau_patience must be positive");
    if (!(config.target_train_acc >= 0.0 && config.target_train_acc <= 1.0))
        fail("target_train_acc must be in [0,1]");
    if (!(config.train_fraction > 0.0 && config.train_fraction <= 1.0))
        fail("train_fraction must be in (0,1]");
    if (!(config.val_fraction >= 0.0 && config.val_fraction < 1.0))
        fail("val_fraction must be in [0,1)");
    if (config.channels.empty()) fail("channels must not be empty");
    for (std::size_t c : config.channels)
        if (c == 0) fail("channels must be positive");
    if (config.kt == 0 || config.kt % 2 == 0) fail("kt must be odd");
    if (config.neurons == 0) fail("neurons must be positive");
    if (config.blocks == 0) fail("blocks must be positive");
    if (config.clamp_t == 0) fail("clamp_t must be positive");
    split_protocol_from_name(config.protocol); // throws on unknown names
}

SplitConfig split_config_from(const TrainConfig& config) {
    SplitConfig split;
    split.protocol = split_protocol_from_name(config.protocol);
    split.seed = config.seed;
    split.train_fraction = config.train_fraction;
    split.val_fraction = config.val_fraction;
    return split;
}

TrainResult train_stream(const DatasetSplits& splits, const TrainConfig& config,
                         const EpochCallback& on_epoch) {
    validate_train_config(config);
    if (splits.train.empty()) throw std::runtime_error("training split is empty");
    if (splits.class_names.empty()) throw std::runtime_error("dataset has no classes");
    const std::size_t num_classes = splits.class_names.size();

    std::vector<SkeletonSequence> train_seqs = load_all(splits.train, 0);
    const TopologyKind kind = resolve_topology(config.topology, train_seqs.front().joints);
    const SkeletonTopology topo = build_hand_topology(kind);
    for (std::size_t i = 0; i < train_seqs.size(); ++i)
        if (train_seqs[i].joints != topo.joint_count)
            throw std::runtime_error(splits.train[i].path + ": expected " +
                                     std::to_string(topo.joint_count) + " joints, found " +
                                     std::to_string(train_seqs[i].joints));
    std::vector<SkeletonSequence> val_seqs = load_all(splits.val, topo.joint_count);

    SagcnConfig sagcn_config;
    sagcn_config.channels = config.channels;
    sagcn_config.stride2_unit = config.stride2_unit;
    sagcn_config.kt = config.kt;
    sagcn_config.unit_shortcut = config.unit_shortcut;
    sagcn_config.dropout = config.dropout;
    RbiConfig rbi_config;
    rbi_config.neurons = config.neurons;
    rbi_config.blocks = config.blocks;
    rbi_config.dropout = config.dropout;
    rbi_config.clamp_t = config.clamp_t;

    StreamModel model =
        make_stream_model(config.stream, kind, num_classes, sagcn_config, rbi_config, config.seed);
    model.center_wrist = config.center_wrist;

    AdamConfig adam_config;
    adam_config.lr = config.lr;
    Adam opt(model.sagcn ? model.sagcn->named_parameters() : model.rbi->named_parameters(),
             adam_config);

    TrainResult result;
    result.class_names = splits.class_names;

    double best_val = -1.0;
    std::size_t best_epoch = 0;
    std::vector<std::vector<double>> best_snapshot;
    std::size_t since_improve = 0; // epochs since validation last improved
    std::size_t since_signal = 0;  // plateau counter, reset on improvement or decay
    std::size_t global_step = 0;

    std::vector<std::size_t> order(train_seqs.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(config.seed, 0x65706f6368ULL, epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            std::vector<const SkeletonSequence*> ptrs;
            ptrs.reserve(stop - start);
            for (std::size_t q = start; q < stop; ++q) ptrs.push_back(&train_seqs[order[q]]);
            GestureBatch batch = make_batch(ptrs, topo, config.center_wrist);

            ++global_step;
            opt.zero_grad();
            const std::uint64_t drop_seed = mix_seed(config.seed, 0x64726f70ULL, global_step);
            Tensor logits;
            if (model.sagcn) {
                AdjacencyTensors adj{batch.a0, batch.a1, batch.a2};
                logits = sagcn_logits(batch.coordinates, *model.sagcn, adj, Mode::train,
                                      drop_seed);
            } else {
                logits = rbi_logits(batch.recurrent, *model.rbi, Mode::train, drop_seed);
            }
            Tensor loss = cross_entropy(logits, batch.labels);
            const double loss_value = loss.item();
            if (!std::isfinite(loss_value))
                throw std::runtime_error("training diverged: non-finite loss at step " +
                                         std::to_string(global_step) + " (epoch " +
                                         std::to_string(epoch) + ")");
            backward(loss, /*release_graph=*/true);
            opt.step();
            if (model.rbi) clamp_recurrent_weights(*model.rbi, config.clamp_t);
            loss_sum += loss_value * static_cast<double>(stop - start);
        }
        const double epoch_loss = loss_sum / static_cast<double>(train_seqs.size());

        const double train_acc = split_accuracy(model, train_seqs, config.batch_size);
        const double val_acc =
            val_seqs.empty() ? train_acc : split_accuracy(model, val_seqs, config.batch_size);

        result.history.push_back(EpochRecord{epoch, epoch_loss, train_acc, val_acc, opt.lr()});
        if (on_epoch) on_epoch(result.history.back());

        const bool improved = val_acc > best_val;
        if (improved) {
            best_val = val_acc;
            best_epoch = epoch;
            best_snapshot = snapshot_state(model);
            since_improve = 0;
            since_signal = 0;
        } else {
            ++since_improve;
            ++since_signal;
        }

        if (config.decay_policy == "literal") {
            // decay on every improvement; the first epoch only sets the baseline
            if (improved && epoch > 1) opt.set_lr(opt.lr() * config.lr_decay);
        } else if (since_signal >= config.plateau_patience) {
            opt.set_lr(opt.lr() * config.lr_decay);
            since_signal = 0;
        }

        if (config.target_train_acc > 0.0 && train_acc >= config.target_train_acc) break;
        if (config.early_stop_patience > 0 && since_improve >= config.early_stop_patience) break;
    }

    if (!best_snapshot.empty()) restore_state(model, best_snapshot);
    result.best_val_acc = best_val < 0.0 ? 0.0 : best_val;
    result.best_epoch = best_epoch;
    result.model = std::move(model);
    return result;
}

std::vector<std::vector<double>> stream_scores(StreamModel& model,
                                               const std::vector<SkeletonSequence>& seqs,
                                               std::size_t batch_size) {
    if (!model.sagcn && !model.rbi) throw std::logic_error("stream model is empty");
    if (batch_size == 0) batch_size = 1;
    const SkeletonTopology topo = build_hand_topology(model.topology);
    const std::size_t k = model.num_classes();

    std::vector<std::vector<double>> out;
    out.reserve(seqs.size());
    NoGradGuard guard;
    for (std::size_t start = 0; start < seqs.size(); start += batch_size) {
        const std::size_t stop = std::min(seqs.size(), start + batch_size);
        std::vector<const SkeletonSequence*> ptrs;
        ptrs.reserve(stop - start);
        for (std::size_t q = start; q < stop; ++q) ptrs.push_back(&seqs[q]);
        GestureBatch batch = make_batch(ptrs, topo, model.center_wrist);

        Tensor probs;
        if (model.sagcn) {
            AdjacencyTensors adj{batch.a0, batch.a1, batch.a2};
            probs = sagcn_forward(batch.coordinates, *model.sagcn, adj, Mode::infer, 0);
        } else {
            probs = rbi_forward(batch.recurrent, *model.rbi, Mode::infer, 0);
        }
        const double* p = probs.data();
        for (std::size_t row = 0; row < stop - start; ++row)
            out.emplace_back(p + row * k, p + (row + 1) * k);
    }
    return out;
}

std::vector<double> fuse_scores(const std::vector<double>& v1, const std::vector<double>& v2) {
    if (v1.size() != v2.size())
        throw std::invalid_argument("fuse: score vectors differ in length");
    if (v1.empty()) throw std::invalid_argument("fuse: empty score vectors");
    std::vector<double> out(v1.size());
    for (std::size_t i = 0; i < v1.size(); ++i) out[i] = v1[i] * v2[i];
    return out;
}

std::size_t argmax_lowest(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

std::size_t fuse_and_classify(const std::vector<double>& v1, const std::vector<double>& v2) {
    return argmax_lowest(fuse_scores(v1, v2));
}

EvalReport report_from_scores(const std::vector<std::vector<double>>& scores,
                              const std::vector<std::size_t>& labels, std::size_t num_classes) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("evaluate: scores/labels size mismatch");
    if (num_classes == 0) throw std::invalid_argument("evaluate: class count must be positive");

    EvalReport rep;
    rep.total = scores.size();
    rep.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    rep.scores = scores;
    rep.labels = labels;
    rep.predicted.resize(scores.size());

    std::size_t hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].size() != num_classes)
            throw std::invalid_argument("evaluate: score vector length differs from class count");
        if (labels[i] >= num_classes)
            throw std::runtime_error(
                "evaluate: label out of range — the model and dataset disagree on class count");
        const std::size_t p = argmax_lowest(scores[i]);
        rep.predicted[i] = p;
        ++rep.confusion[labels[i]][p];
        if (p == labels[i]) ++hits;
    }
    rep.accuracy = rep.total ? static_cast<double>(hits) / static_cast<double>(rep.total) : 0.0;

    rep.per_class_accuracy.assign(num_classes, 0.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::size_t row = 0;
        for (std::size_t q = 0; q < num_classes; ++q) row += rep.confusion[c][q];
        if (row) rep.per_class_accuracy[c] =
            static_cast<double>(rep.confusion[c][c]) / static_cast<double>(row);
    }
    return rep;
}

EvalReport evaluate(StreamModel& model, const std::vector<SkeletonSequence>& seqs,
                    std::size_t batch_size) {
    if (seqs.empty()) throw std::invalid_argument("evaluate: test split is empty");
    return report_from_scores(stream_scores(model, seqs, batch_size), labels_of(seqs),
                              model.num_classes());
}

EvalReport evaluate_fused(StreamModel& first, StreamModel& second,
                          const std::vector<SkeletonSequence>& seqs, std::size_t batch_size) {
    if (seqs.empty()) throw std::invalid_argument("evaluate: test split is empty");
    if (first.num_classes() != second.num_classes())
        throw std::invalid_argument("evaluate: the two checkpoints disagree on class count");
    const auto s1 = stream_scores(first, seqs, batch_size);
    const auto s2 = stream_scores(second, seqs, batch_size);
    std::vector<std::vector<double>> fused(s1.size());
    for (std::size_t i = 0; i < s1.size(); ++i) fused[i] = fuse_scores(s1[i], s2[i]);
    return report_from_scores(fused, labels_of(seqs), first.num_classes());
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
    os << "epoch,loss,train_acc,val_acc,lr\n";
    for (const EpochRecord& r : history)
        os << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.train_acc) << ','
           << format_double(r.val_acc) << ',' << format_double(r.lr) << '\n';
}

void write_confusion_csv(std::ostream& os, const EvalReport& report,
                         const std::vector<std::string>& class_names) {
    if (class_names.size() != report.confusion.size())
        throw std::invalid_argument("confusion report: class-name count mismatch");
    os << "class";
    for (const std::string& name : class_names) os << ',' << name;
    os << '\n';
    for (std::size_t c = 0; c < report.confusion.size(); ++c) {
        os << class_names[c];
        for (std::size_t count : report.confusion[c]) os << ',' << count;
        os << '\n';
    }
}

void write_scores_csv(std::ostream& os, const EvalReport& report,
                      const std::vector<std::string>& class_names) {
    os << "sequence,label,predicted";
    for (const std::string& name : class_names) os << ',' << name;
    os << '\n';
    for (std::size_t i = 0; i < report.scores.size(); ++i) {
        os << i << ',' << report.labels[i] << ',' << report.predicted[i];
        for (double s : report.scores[i]) os << ',' << format_double(s);
        os << '\n';
    }
}

} // namespace gestnet
