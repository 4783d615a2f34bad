#include "ipk/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ipk {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

Config Config::parse_string(const std::string& text) {
    Config cfg;
    cfg.source_ = text;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip comments outside quotes
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') continue;  // section header; keys stay flat
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        if (key.empty() || raw.empty())
            throw std::runtime_error("config: line " + std::to_string(lineno) + ": empty key or value");

        Value v;
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"')
                throw std::runtime_error("config: line " + std::to_string(lineno) + ": unterminated string");
            v.kind = Value::Kind::Text;
            v.str = raw.substr(1, raw.size() - 2);
        } else if (raw == "true" || raw == "false") {
            v.kind = Value::Kind::Bool;
            v.flag = (raw == "true");
        } else if (raw.front() == '[') {
            if (raw.back() != ']')
                throw std::runtime_error("config: line " + std::to_string(lineno) + ": unterminated array");
            v.kind = Value::Kind::Array;
            std::istringstream items(raw.substr(1, raw.size() - 2));
            std::string item;
            while (std::getline(items, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                v.array.push_back(std::stod(item));
            }
        } else {
            v.kind = Value::Kind::Number;
            std::size_t used = 0;
            v.num = std::stod(raw, &used);
            if (used != raw.size())
                throw std::runtime_error("config: line " + std::to_string(lineno) + ": bad number: " + raw);
        }
        cfg.values_[key] = std::move(v);
    }
    return cfg;
}

const Config::Value& Config::at(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::out_of_range("config: missing key: " + key);
    return it->second;
}

double Config::number(const std::string& key) const {
    const auto& v = at(key);
    if (v.kind != Value::Kind::Number) throw std::runtime_error("config: key is not a number: " + key);
    return v.num;
}

double Config::number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

std::int64_t Config::integer(const std::string& key) const {
    const double v = number(key);
    if (v != std::floor(v)) throw std::runtime_error("config: key is not an integer: " + key);
    return static_cast<std::int64_t>(v);
}

std::int64_t Config::integer_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? integer(key) : fallback;
}

bool Config::boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (v.kind != Value::Kind::Bool) throw std::runtime_error("config: key is not a boolean: " + key);
    return v.flag;
}

std::string Config::text(const std::string& key) const {
    const auto& v = at(key);
    if (v.kind != Value::Kind::Text) throw std::runtime_error("config: key is not a string: " + key);
    return v.str;
}

std::string Config::text_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
}

std::vector<double> Config::numbers(const std::string& key) const {
    const auto& v = at(key);
    if (v.kind != Value::Kind::Array) throw std::runtime_error("config: key is not an array: " + key);
    return v.array;
}

std::vector<std::int64_t> Config::integers(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (double x : numbers(key)) {
        if (x != std::floor(x)) throw std::runtime_error("config: array entry is not an integer: " + key);
        out.push_back(static_cast<std::int64_t>(x));
    }
    return out;
}

}  // namespace ipk
