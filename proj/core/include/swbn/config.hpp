#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace swbn {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat INI-style experiment config: `key = value` lines under `[section]`
// headers, `#` comments. Section and key sets are validated per subcommand;
// unknown keys are rejected.
class ExperimentConfig {
public:
    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    int get_int(const std::string& section, const std::string& key) const;
    int get_int_or(const std::string& section, const std::string& key, int fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double_or(const std::string& section, const std::string& key,
                         double fallback) const;
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
    std::vector<int> get_int_list(const std::string& section, const std::string& key) const;
    std::vector<double> get_double_list(const std::string& section,
                                        const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    // Throws ConfigError when a key outside the allowed set appears or a
    // required "section.key" is missing.
    void validate(const std::vector<std::string>& allowed,
                  const std::vector<std::string>& required) const;

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace swbn
