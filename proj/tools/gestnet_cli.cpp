#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gestnet/checkpoint.hpp"
#include "gestnet/config.hpp"
#include "gestnet/dataset.hpp"
#include "gestnet/sagcn.hpp"
#include "gestnet/skeleton.hpp"
#include "gestnet/synthetic.hpp"
#include "gestnet/train.hpp"

namespace {

using namespace gestnet;

void print_warnings(const DatasetSplits& splits) {
    for (const std::string& w : splits.warnings) std::cout << "warning: " << w << "\n";
}

TrainConfig config_from_file(const std::string& path, const std::string& cli_stream) {
    if (path.empty()) return parse_train_config(KeyValues{}, "<defaults>", cli_stream);
    return parse_train_config(load_key_values(path), path, cli_stream);
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    body(out);
    if (!out) throw std::runtime_error("write failed for " + path);
}

int run_train(const std::string& stream, const std::string& data_root,
              const std::string& config_path, bool seed_given, std::uint64_t seed,
              const std::string& out_path, std::string history_path) {
    TrainConfig cfg = config_from_file(config_path, stream);
    if (seed_given) cfg.seed = seed;

    DatasetSplits splits = load_dataset(data_root, split_config_from(cfg));
    print_warnings(splits);
    std::cout << "classes: " << splits.class_names.size() << "  train: " << splits.train.size()
              << "  val: " << splits.val.size() << "  test: " << splits.test.size() << "\n";

    TrainResult result = train_stream(splits, cfg, [](const EpochRecord& r) {
        std::cout << "epoch " << r.epoch << "  loss " << format_double(r.loss) << "  train "
                  << format_double(r.train_acc) << "  val " << format_double(r.val_acc) << "  lr "
                  << format_double(r.lr) << "\n";
    });

    save_model(out_path, result.model);
    if (history_path.empty()) history_path = out_path + ".history.csv";
    write_file(history_path, [&](std::ostream& os) { write_history_csv(os, result.history); });

    std::cout << "best val " << format_double(result.best_val_acc) << " at epoch "
              << result.best_epoch << "; checkpoint " << out_path << "; history " << history_path
              << "\n";
    return 0;
}

int run_eval(const std::vector<std::string>& checkpoints, bool fuse, const std::string& data_root,
             const std::string& split_name, const std::string& config_path,
             const std::string& report_path, const std::string& scores_path) {
    if (checkpoints.empty() || checkpoints.size() > 2)
        throw std::runtime_error("eval takes one checkpoint, or two with --fuse");
    if (fuse && checkpoints.size() != 2)
        throw std::runtime_error("--fuse needs exactly two --checkpoint options");
    if (!fuse && checkpoints.size() == 2)
        throw std::runtime_error("two checkpoints require --fuse");

    TrainConfig cfg = config_from_file(config_path, "");
    DatasetSplits splits = load_dataset(data_root, split_config_from(cfg));
    print_warnings(splits);

    const std::vector<SequenceRef>* refs = nullptr;
    if (split_name == "test") refs = &splits.test;
    else if (split_name == "train") refs = &splits.train;
    else if (split_name == "val") refs = &splits.val;
    else throw std::runtime_error("unknown split '" + split_name + "'");

    StreamModel first = load_model(checkpoints[0]);
    if (first.num_classes() != splits.class_names.size())
        throw std::runtime_error("the checkpoint and dataset disagree on class count");
    std::vector<SkeletonSequence> seqs = load_all(*refs, first.joints());

    EvalReport report;
    if (fuse) {
        StreamModel second = load_model(checkpoints[1]);
        if (second.topology != first.topology)
            throw std::runtime_error("the two checkpoints disagree on topology");
        report = evaluate_fused(first, second, seqs);
    } else {
        report = evaluate(first, seqs);
    }

    std::cout << "accuracy " << format_double(report.accuracy) << " on " << report.total
              << " sequences\n";
    for (std::size_t c = 0; c < splits.class_names.size(); ++c)
        std::cout << "  " << splits.class_names[c] << " "
                  << format_double(report.per_class_accuracy[c]) << "\n";

    if (!report_path.empty())
        write_file(report_path,
                   [&](std::ostream& os) { write_confusion_csv(os, report, splits.class_names); });
    if (!scores_path.empty())
        write_file(scores_path,
                   [&](std::ostream& os) { write_scores_csv(os, report, splits.class_names); });
    return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_dir) {
    SyntheticDatasetSpec spec = parse_synthetic_spec(load_key_values(spec_path), spec_path);
    write_synthetic_dataset(spec.spec, out_dir, spec.train_fraction);
    std::cout << "wrote " << spec.spec.classes.size() * spec.spec.samples_per_class
              << " sequences (" << spec.spec.classes.size() << " classes) to " << out_dir << "\n";
    return 0;
}

int run_export_attention(const std::string& checkpoint, const std::string& sequence_path,
                         const std::string& out_path, bool unit_given, std::size_t unit) {
    StreamModel model = load_model(checkpoint);
    if (!model.sagcn)
        throw std::runtime_error("attention export requires an sagcn checkpoint");

    SkeletonSequence seq = load_sequence(sequence_path);
    const SkeletonTopology topo = build_hand_topology(model.topology);
    GestureBatch batch = make_batch({&seq}, topo, model.center_wrist);
    AdjacencyTensors adj{batch.a0, batch.a1, batch.a2};
    std::vector<Tensor> maps = sagcn_attention_maps(batch.coordinates, *model.sagcn, adj);

    const std::size_t j = topo.joint_count;
    auto write_map = [&](const std::string& path, const Tensor& map) {
        write_file(path, [&](std::ostream& os) { write_matrix_csv(os, map.data(), j, j); });
        std::cout << "wrote " << path << "\n";
    };

    if (unit_given) {
        if (unit >= maps.size())
            throw std::runtime_error("--unit out of range; the network has " +
                                     std::to_string(maps.size()) + " units");
        write_map(out_path, maps[unit]);
        return 0;
    }
    const std::filesystem::path base(out_path);
    for (std::size_t i = 0; i < maps.size(); ++i) {
        std::filesystem::path p = base.parent_path() /
                                  (base.stem().string() + "_unit" + std::to_string(i) +
                                   base.extension().string());
        write_map(p.string(), maps[i]);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-stream skeleton gesture recognition"};
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "train one stream on a dataset directory");
    std::string train_stream_name, train_root, train_config, train_out, train_history;
    std::uint64_t train_seed = 0;
    train->add_option("--stream", train_stream_name, "sagcn | rbi");
    train->add_option("--data-root", train_root, "dataset directory")->required();
    train->add_option("--config", train_config, "key = value training configuration");
    auto* seed_opt = train->add_option("--seed", train_seed, "overrides the config seed");
    train->add_option("--out", train_out, "checkpoint path to write")->required();
    train->add_option("--history", train_history, "history CSV (default <out>.history.csv)");

    auto* eval = app.add_subcommand("eval", "evaluate one checkpoint, or two fused");
    std::vector<std::string> eval_checkpoints;
    std::string eval_root, eval_split = "test", eval_config, eval_report, eval_scores;
    bool eval_fuse = false;
    eval->add_option("--checkpoint", eval_checkpoints, "checkpoint path (repeat to fuse)")
        ->required();
    eval->add_flag("--fuse", eval_fuse, "multiply the two streams' class scores");
    eval->add_option("--data-root", eval_root, "dataset directory")->required();
    eval->add_option("--split", eval_split, "test | train | val (default test)");
    eval->add_option("--config", eval_config, "config used for split bookkeeping");
    eval->add_option("--report", eval_report, "confusion matrix CSV path");
    eval->add_option("--scores", eval_scores, "per-sequence score dump CSV path");

    auto* synth = app.add_subcommand("synth", "generate a synthetic gesture dataset");
    std::string synth_spec, synth_out;
    synth->add_option("--spec", synth_spec, "key = value generator spec")->required();
    synth->add_option("--out", synth_out, "dataset directory to create")->required();

    auto* exp = app.add_subcommand("export-attention",
                                   "write a sequence's per-unit attention maps as CSV");
    std::string exp_checkpoint, exp_sequence, exp_out;
    std::size_t exp_unit = 0;
    exp->add_option("--checkpoint", exp_checkpoint)->required();
    exp->add_option("--sequence", exp_sequence, "a .skl sequence file")->required();
    exp->add_option("--out", exp_out, "output CSV path")->required();
    auto* unit_opt = exp->add_option("--unit", exp_unit, "export only this unit's map");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed())
            return run_train(train_stream_name, train_root, train_config, seed_opt->count() > 0,
                             train_seed, train_out, train_history);
        if (eval->parsed())
            return run_eval(eval_checkpoints, eval_fuse, eval_root, eval_split, eval_config,
                            eval_report, eval_scores);
        if (synth->parsed()) return run_synth(synth_spec, synth_out);
        if (exp->parsed())
            return run_export_attention(exp_checkpoint, exp_sequence, exp_out,
                                        unit_opt->count() > 0, exp_unit);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
