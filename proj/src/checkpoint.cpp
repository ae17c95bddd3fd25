#include "gestnet/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace gestnet {

namespace {

constexpr const char* kMagic = "gestnet-checkpoint v1";

void append_double(std::string& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

double parse_double(const char*& p, const char* end, const std::string& context) {
    while (p != end && (*p == ' ' || *p == '\t')) ++p;
    double v = 0.0;
    auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc())
        throw std::runtime_error(context + ": malformed value");
    p = res.ptr;
    return v;
}

std::size_t shape_count(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

TensorRecord scalar_record(const std::string& name, double value) {
    return TensorRecord{name, Shape{}, {value}};
}

double take_scalar(std::unordered_map<std::string, TensorRecord>& records,
                   const std::string& name) {
    auto it = records.find(name);
    if (it == records.end())
        throw std::runtime_error("checkpoint missing tensor '" + name + "'");
    if (it->second.values.size() != 1)
        throw std::runtime_error("checkpoint tensor '" + name + "' is not a scalar");
    double v = it->second.values[0];
    records.erase(it);
    return v;
}

std::size_t take_count(std::unordered_map<std::string, TensorRecord>& records,
                       const std::string& name) {
    double v = take_scalar(records, name);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw std::runtime_error("checkpoint tensor '" + name + "' is not a count");
    return static_cast<std::size_t>(v);
}

} // namespace

void write_checkpoint(const std::string& path, const std::vector<TensorRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);

    out << kMagic << '\n';
    std::string line;
    for (const TensorRecord& rec : records) {
        if (rec.values.size() != shape_count(rec.shape))
            throw std::runtime_error("checkpoint tensor '" + rec.name +
                                     "' has mismatched value count");
        out << rec.name;
        for (std::size_t d : rec.shape) out << ' ' << d;
        out << '\n';

        line.clear();
        line.reserve(rec.values.size() * 20);
        for (std::size_t i = 0; i < rec.values.size(); ++i) {
            if (i) line.push_back(' ');
            append_double(line, rec.values[i]);
        }
        line.push_back('\n');
        out << line;
    }
    if (!out) throw std::runtime_error("write failed for checkpoint: " + path);
}

std::vector<TensorRecord> read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

    std::string header;
    if (!std::getline(in, header) || header != kMagic)
        throw std::runtime_error(path + ": not a checkpoint file");

    std::vector<TensorRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;

        TensorRecord rec;
        std::istringstream hs(line);
        hs >> rec.name;
        std::size_t dim = 0;
        while (hs >> dim) rec.shape.push_back(dim);
        if (rec.name.empty() || (hs.fail() && !hs.eof()))
            throw std::runtime_error(path + ": malformed tensor header '" + line + "'");

        if (!std::getline(in, line))
            throw std::runtime_error(path + ": missing values for tensor '" + rec.name + "'");

        const std::size_t count = shape_count(rec.shape);
        rec.values.reserve(count);
        const char* p = line.data();
        const char* end = line.data() + line.size();
        const std::string context = path + ": tensor '" + rec.name + "'";
        for (std::size_t i = 0; i < count; ++i)
            rec.values.push_back(parse_double(p, end, context));
        while (p != end && (*p == ' ' || *p == '\t')) ++p;
        if (p != end)
            throw std::runtime_error(context + ": trailing values beyond declared shape");

        records.push_back(std::move(rec));
    }
    return records;
}

std::size_t StreamModel::joints() const {
    if (sagcn) return sagcn->joints;
    if (rbi) return rbi->joints;
    throw std::logic_error("stream model is empty");
}

std::size_t StreamModel::num_classes() const {
    if (sagcn) return sagcn->num_classes;
    if (rbi) return rbi->num_classes;
    throw std::logic_error("stream model is empty");
}

StreamModel make_stream_model(const std::string& stream, TopologyKind topology,
                              std::size_t num_classes, const SagcnConfig& sagcn_config,
                              const RbiConfig& rbi_config, std::uint64_t seed) {
    if (topology == TopologyKind::custom)
        throw std::invalid_argument("stream models require a named hand topology");

    StreamModel model;
    model.stream = stream;
    model.topology = topology;

    const std::size_t joints = build_hand_topology(topology).joint_count;
    Rng init_rng(mix_seed(seed, 0x696e6974ULL, 0));
    if (stream == "sagcn") {
        model.sagcn = make_sagcn(joints, num_classes, sagcn_config, init_rng);
    } else if (stream == "rbi") {
        model.rbi = make_rbi(joints, num_classes, rbi_config, init_rng);
    } else {
        throw std::invalid_argument("unknown stream '" + stream + "' (expected sagcn or rbi)");
    }
    return model;
}

std::vector<NamedBuffer> model_state_refs(StreamModel& model) {
    std::vector<NamedBuffer> refs;
    auto add = [&refs](const std::string& name, Tensor t) {
        refs.push_back(NamedBuffer{name, t.shape(), &t.values()});
    };
    auto add_raw = [&refs](const std::string& name, std::vector<double>& v) {
        refs.push_back(NamedBuffer{name, Shape{v.size()}, &v});
    };

    if (model.sagcn) {
        for (auto& [name, tensor] : model.sagcn->named_parameters()) add(name, tensor);
        for (std::size_t i = 0; i < model.sagcn->units.size(); ++i) {
            const std::string p = "unit" + std::to_string(i) + ".";
            SagcnUnitParams& unit = model.sagcn->units[i];
            add_raw(p + "bn_spatial.running_mean", unit.bn_spatial.running_mean);
            add_raw(p + "bn_spatial.running_var", unit.bn_spatial.running_var);
            add_raw(p + "bn_temporal.running_mean", unit.bn_temporal.running_mean);
            add_raw(p + "bn_temporal.running_var", unit.bn_temporal.running_var);
        }
    } else if (model.rbi) {
        for (auto& [name, tensor] : model.rbi->named_parameters()) add(name, tensor);
        for (std::size_t i = 0; i < model.rbi->blocks.size(); ++i) {
            const std::string p = "block" + std::to_string(i) + ".";
            RbiBlockParams& block = model.rbi->blocks[i];
            add_raw(p + "bn.running_mean", block.bn.running_mean);
            add_raw(p + "bn.running_var", block.bn.running_var);
        }
    } else {
        throw std::logic_error("stream model is empty");
    }
    return refs;
}

std::vector<std::vector<double>> snapshot_state(StreamModel& model) {
    std::vector<std::vector<double>> snap;
    for (const NamedBuffer& ref : model_state_refs(model)) snap.push_back(*ref.data);
    return snap;
}

void restore_state(StreamModel& model, const std::vector<std::vector<double>>& snapshot) {
    std::vector<NamedBuffer> refs = model_state_refs(model);
    if (refs.size() != snapshot.size())
        throw std::invalid_argument("snapshot does not match the model layout");
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].data->size() != snapshot[i].size())
            throw std::invalid_argument("snapshot does not match the model layout");
        *refs[i].data = snapshot[i];
    }
}

void save_model(const std::string& path, StreamModel& model) {
    std::vector<TensorRecord> records;
    records.push_back(scalar_record("meta.stream", model.sagcn ? 0.0 : 1.0));
    records.push_back(
        scalar_record("meta.topology", static_cast<double>(static_cast<int>(model.topology))));
    records.push_back(scalar_record("meta.joints", static_cast<double>(model.joints())));
    records.push_back(scalar_record("meta.num_classes", static_cast<double>(model.num_classes())));
    records.push_back(scalar_record("meta.center_wrist", model.center_wrist ? 1.0 : 0.0));

    if (model.sagcn) {
        const SagcnConfig& cfg = model.sagcn->config;
        records.push_back(scalar_record("meta.kt", static_cast<double>(cfg.kt)));
        records.push_back(
            scalar_record("meta.stride2_unit", static_cast<double>(cfg.stride2_unit)));
        records.push_back(scalar_record("meta.unit_shortcut", cfg.unit_shortcut ? 1.0 : 0.0));
        TensorRecord channels{"meta.channels", {cfg.channels.size()}, {}};
        for (std::size_t c : cfg.channels) channels.values.push_back(static_cast<double>(c));
        records.push_back(std::move(channels));
    } else if (model.rbi) {
        const RbiConfig& cfg = model.rbi->config;
        records.push_back(scalar_record("meta.neurons", static_cast<double>(cfg.neurons)));
        records.push_back(scalar_record("meta.blocks", static_cast<double>(cfg.blocks)));
    }

    for (const NamedBuffer& ref : model_state_refs(model))
        records.push_back(TensorRecord{ref.name, ref.shape, *ref.data});
    write_checkpoint(path, records);
}

StreamModel load_model(const std::string& path) {
    std::unordered_map<std::string, TensorRecord> records;
    for (TensorRecord& rec : read_checkpoint(path)) {
        const std::string name = rec.name;
        if (!records.emplace(name, std::move(rec)).second)
            throw std::runtime_error(path + ": duplicate tensor '" + name + "'");
    }

    const double stream_id = take_scalar(records, "meta.stream");
    const int topology_id = static_cast<int>(take_scalar(records, "meta.topology"));
    if (topology_id != 0 && topology_id != 1)
        throw std::runtime_error(path + ": unknown topology id");
    const TopologyKind topology = static_cast<TopologyKind>(topology_id);
    const std::size_t joints = take_count(records, "meta.joints");
    const std::size_t num_classes = take_count(records, "meta.num_classes");
    const bool center_wrist = take_scalar(records, "meta.center_wrist") != 0.0;

    SagcnConfig sagcn_config;
    RbiConfig rbi_config;
    std::string stream;
    if (stream_id == 0.0) {
        stream = "sagcn";
        sagcn_config.kt = take_count(records, "meta.kt");
        sagcn_config.stride2_unit = take_count(records, "meta.stride2_unit");
        sagcn_config.unit_shortcut = take_scalar(records, "meta.unit_shortcut") != 0.0;
        auto it = records.find("meta.channels");
        if (it == records.end())
            throw std::runtime_error("checkpoint missing tensor 'meta.channels'");
        sagcn_config.channels.clear();
        for (double v : it->second.values)
            sagcn_config.channels.push_back(static_cast<std::size_t>(v));
        records.erase(it);
    } else if (stream_id == 1.0) {
        stream = "rbi";
        rbi_config.neurons = take_count(records, "meta.neurons");
        rbi_config.blocks = take_count(records, "meta.blocks");
    } else {
        throw std::runtime_error(path + ": unknown stream id");
    }

    StreamModel model =
        make_stream_model(stream, topology, num_classes, sagcn_config, rbi_config, /*seed=*/0);
    model.center_wrist = center_wrist;
    if (model.joints() != joints)
        throw std::runtime_error(path + ": joint count does not match the topology");

    for (const NamedBuffer& ref : model_state_refs(model)) {
        auto it = records.find(ref.name);
        if (it == records.end())
            throw std::runtime_error("checkpoint missing tensor '" + ref.name + "'");
        if (it->second.shape != ref.shape)
            throw std::runtime_error("checkpoint tensor '" + ref.name + "' has the wrong shape");
        *ref.data = std::move(it->second.values);
        records.erase(it);
    }
    if (!records.empty())
        throw std::runtime_error("checkpoint has unexpected tensor '" +
                                 records.begin()->first + "'");
    return model;
}

} // namespace gestnet
