#ifndef GESTNET_CONFIG_HPP
#define GESTNET_CONFIG_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gestnet {

// flat `key = value` file; '#' starts a comment, blank lines ignored
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(const std::string& text, const std::string& source);
KeyValues load_key_values(const std::string& path);

// pulls typed values out of a KeyValues list and rejects leftovers
class ConfigReader {
public:
    ConfigReader(KeyValues values, std::string source);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback);
    double get_double(const std::string& key, double fallback);
    std::size_t get_count(const std::string& key, std::size_t fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    bool get_bool(const std::string& key, bool fallback);

    void finish() const; // throws if any key was never consumed

private:
    const std::string* find(const std::string& key);

    KeyValues values_;
    std::vector<bool> consumed_;
    std::string source_;
};

} // namespace gestnet

#endif
