#include "cardem/params.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cardem {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

ParameterSet ParameterSet::from_string(const std::string& text, std::string origin) {
    ParameterSet ps;
    ps.origin_ = std::move(origin);
    ps.checksum_ = fnv1a64(text);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(ps.origin_ + ":" + std::to_string(lineno) +
                                     ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::runtime_error(ps.origin_ + ":" + std::to_string(lineno) +
                                     ": empty key or value");
        if (ps.values_.count(key))
            throw std::runtime_error(ps.origin_ + ":" + std::to_string(lineno) +
                                     ": duplicate key '" + key + "'");
        ps.values_[key] = val;
    }
    if (ps.values_.count("dataset.version")) ps.version_ = ps.values_["dataset.version"];
    return ps;
}

ParameterSet ParameterSet::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open parameter dataset: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str(), path.string());
}

double ParameterSet::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw std::runtime_error(origin_ + ": missing parameter '" + key + "'");
    try {
        size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(origin_ + ": parameter '" + key +
                                 "' is not a number: " + it->second);
    }
}

double ParameterSet::get_or(const std::string& key, double fallback) const {
    return has(key) ? get(key) : fallback;
}

std::string ParameterSet::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw std::runtime_error(origin_ + ": missing parameter '" + key + "'");
    return it->second;
}

} // namespace cardem
