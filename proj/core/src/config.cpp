#include "swbn/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace swbn {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str());
}

ExperimentConfig ExperimentConfig::parse_string(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            cfg.sections_[section];
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": key outside any [section]");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (cfg.sections_[section].count(key))
            throw ConfigError("config: duplicate key " + section + "." + key);
        cfg.sections_[section][key] = value;
    }
    return cfg;
}

bool ExperimentConfig::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string ExperimentConfig::get(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end() || !s->second.count(key))
        throw ConfigError("config: missing required key " + section + "." + key);
    return s->second.at(key);
}

std::string ExperimentConfig::get_or(const std::string& section, const std::string& key,
                                     const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

int ExperimentConfig::get_int(const std::string& section, const std::string& key) const {
    try {
        return std::stoi(get(section, key));
    } catch (const std::logic_error&) {
        throw ConfigError("config: " + section + "." + key + " is not an integer");
    }
}

int ExperimentConfig::get_int_or(const std::string& section, const std::string& key,
                                 int fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

double ExperimentConfig::get_double(const std::string& section, const std::string& key) const {
    try {
        return std::stod(get(section, key));
    } catch (const std::logic_error&) {
        throw ConfigError("config: " + section + "." + key + " is not a number");
    }
}

double ExperimentConfig::get_double_or(const std::string& section, const std::string& key,
                                       double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

std::vector<std::string> ExperimentConfig::get_list(const std::string& section,
                                                    const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream ss(get(section, key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw ConfigError("config: " + section + "." + key + " is an empty list");
    return out;
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& section,
                                                const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : get_list(section, key)) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::logic_error&) {
            throw ConfigError("config: " + section + "." + key + " has non-integer entry '" +
                              item + "'");
        }
    }
    return out;
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& section,
                                                      const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : get_list(section, key)) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::logic_error&) {
            throw ConfigError("config: " + section + "." + key + " has non-numeric entry '" +
                              item + "'");
        }
    }
    return out;
}

void ExperimentConfig::set(const std::string& section, const std::string& key,
                           const std::string& value) {
    sections_[section][key] = value;
}

void ExperimentConfig::validate(const std::vector<std::string>& allowed,
                                const std::vector<std::string>& required) const {
    for (const auto& [section, keys] : sections_) {
        for (const auto& [key, value] : keys) {
            std::string qualified = section + "." + key;
            if (std::find(allowed.begin(), allowed.end(), qualified) == allowed.end())
                throw ConfigError("config: unknown key " + qualified);
        }
    }
    for (const auto& qualified : required) {
        size_t dot = qualified.find('.');
        if (!has(qualified.substr(0, dot), qualified.substr(dot + 1)))
            throw ConfigError("config: missing required key " + qualified);
    }
}

}  // namespace swbn
