#include "gestnet/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gestnet {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& source, const std::string& key,
                       const std::string& message) {
    throw std::runtime_error(source + ": key '" + key + "' " + message);
}

} // namespace

KeyValues parse_key_values(const std::string& text, const std::string& source) {
    KeyValues out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(source + ":" + std::to_string(line_no) +
                                     ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(source + ":" + std::to_string(line_no) + ": empty key");
        for (const auto& [seen, _] : out)
            if (seen == key)
                throw std::runtime_error(source + ":" + std::to_string(line_no) +
                                         ": duplicate key '" + key + "'");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

KeyValues load_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_key_values(buf.str(), path);
}

ConfigReader::ConfigReader(KeyValues values, std::string source)
    : values_(std::move(values)), consumed_(values_.size(), false), source_(std::move(source)) {}

const std::string* ConfigReader::find(const std::string& key) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i].first == key) {
            consumed_[i] = true;
            return &values_[i].second;
        }
    }
    return nullptr;
}

bool ConfigReader::has(const std::string& key) const {
    for (const auto& [k, _] : values_)
        if (k == key) return true;
    return false;
}

std::string ConfigReader::get_string(const std::string& key, const std::string& fallback) {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double ConfigReader::get_double(const std::string& key, double fallback) {
    const std::string* v = find(key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        double parsed = std::stod(*v, &used);
        if (used != v->size()) fail(source_, key, "has a malformed number '" + *v + "'");
        return parsed;
    } catch (const std::logic_error&) {
        fail(source_, key, "has a malformed number '" + *v + "'");
    }
}

std::size_t ConfigReader::get_count(const std::string& key, std::size_t fallback) {
    const std::string* v = find(key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        long long parsed = std::stoll(*v, &used);
        if (used != v->size() || parsed < 0)
            fail(source_, key, "must be a non-negative integer, got '" + *v + "'");
        return static_cast<std::size_t>(parsed);
    } catch (const std::logic_error&) {
        fail(source_, key, "must be a non-negative integer, got '" + *v + "'");
    }
}

std::uint64_t ConfigReader::get_u64(const std::string& key, std::uint64_t fallback) {
    const std::string* v = find(key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        unsigned long long parsed = std::stoull(*v, &used);
        if (used != v->size() || v->front() == '-')
            fail(source_, key, "must be a non-negative integer, got '" + *v + "'");
        return parsed;
    } catch (const std::logic_error&) {
        fail(source_, key, "must be a non-negative integer, got '" + *v + "'");
    }
}

bool ConfigReader::get_bool(const std::string& key, bool fallback) {
    const std::string* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    fail(source_, key, "must be true or false, got '" + *v + "'");
}

void ConfigReader::finish() const {
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!consumed_[i])
            throw std::runtime_error(source_ + ": unknown key '" + values_[i].first + "'");
}

} // namespace gestnet
